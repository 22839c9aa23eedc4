// Experiment runner: reads a config (or a built-in recipe), runs it and writes one CSV.

#include "cee/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace ex = cee::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Seeded BER and outage-rate experiments for MIMO links with channel estimation error"};
  std::string config_path;
  std::string recipe_name;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool list = false;
  bool dump = false;

  app.add_option("config", config_path, "experiment config file (INI)");
  app.add_option("--recipe", recipe_name, "run a built-in recipe instead of a config file");
  app.add_option("--seed", seed, "override the config's master seed");
  app.add_option("--out", out_dir, "directory for the CSV output")->capture_default_str();
  app.add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
  app.add_flag("--list-recipes", list, "print the built-in recipes and exit");
  app.add_flag("--dump-config", dump, "print the resolved config and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& r : ex::recipes()) std::cout << r.name << "  " << r.summary << "\n";
    return 0;
  }
  if (config_path.empty() == recipe_name.empty()) {
    std::cerr << "error: give exactly one of a config path or --recipe <name>\n";
    return 2;
  }

  try {
    ex::ExperimentConfig cfg = recipe_name.empty() ? ex::parse_config_file(config_path) : ex::recipe(recipe_name);
    if (seed) cfg.seed = *seed;
    ex::validate(cfg);
    if (dump) {
      std::cout << ex::serialize(cfg);
      return 0;
    }
    std::cerr << "[" << cfg.name << "] " << ex::to_string(cfg.kind) << ", seed " << cfg.seed << ", config hash "
              << ex::config_hash(cfg) << "\n";
    const auto path = ex::run_experiment(cfg, out_dir, threads, &std::cerr);
    std::cerr << "wrote " << path.string() << "\n";
  } catch (const cee::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
