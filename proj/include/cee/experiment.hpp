#pragma once

// Experiment configs, built-in recipes, runners and CSV output for the
// command-line tool. Every random quantity derives from the config's seed.

#include "cee/bicm.hpp"
#include "cee/rates.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace cee::experiment {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kBerSchema = "ber/1";
inline constexpr std::string_view kRatesSchema = "rates/1";

enum class Kind { BerSweep, RateCurves };

inline std::string_view to_string(Kind k) { return k == Kind::BerSweep ? "ber_sweep" : "rate_curves"; }

struct ExperimentConfig {
  std::string name = "custom";
  Kind kind = Kind::BerSweep;
  SystemConfig system;  ///< sigma_z_sq and p_t are set per grid point
  std::vector<DecodingMetricKind> metrics{DecodingMetricKind::MismatchedML, DecodingMetricKind::Improved};
  std::vector<double> grid_db;  ///< Eb/N0 for ber_sweep, SNR = p_bar sigma_h^2 / sigma_z^2 for rate_curves
  std::uint64_t seed = 0;
  std::string output;

  // ber_sweep
  std::uint64_t n_frames = 100;
  std::uint64_t min_errors = 0;
  std::uint64_t max_frames = 0;
  int n_iters = bicm::kDefaultIterations;
  int n_symbols = bicm::kDefaultSymbolsPerFrame;
  bool perfect_csi = false;

  // rate_curves
  int n_mc = 10000;
  int n_est = 200;
  double gamma = 0.01;

  bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Text <-> values
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(field, "expected a number, got '" + s + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail(field, "expected true|false, got '" + s + "'");
}

/// "a, b, c" or an inclusive range "start:step:stop".
inline std::vector<double> parse_grid(const std::string& field, const std::string& text) {
  const auto s = trim(text);
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) fail(field, "range must read start:step:stop");
    const double start = parse_number<double>(field, parts[0]);
    const double step = parse_number<double>(field, parts[1]);
    const double stop = parse_number<double>(field, parts[2]);
    if (!(step > 0.0)) fail(field, "range step must be > 0");
    if (stop < start) fail(field, "range stop must be >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 100000) fail(field, "range has too many points");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_number<double>(field, p));
  return out;
}

}  // namespace detail

inline Kind parse_kind(const std::string& text) {
  const auto s = detail::trim(text);
  if (s == "ber_sweep") return Kind::BerSweep;
  if (s == "rate_curves") return Kind::RateCurves;
  detail::fail("experiment.kind", "expected ber_sweep|rate_curves, got '" + s + "'");
}

/// Field-level checks of a parsed or hand-built config.
inline void validate(const ExperimentConfig& c) {
  using detail::fail;
  try {
    c.system.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("system.") + e.what());
  }
  if (c.system.n_pilots < c.system.m_t) fail("system.n_pilots", "orthogonal training needs n_pilots >= m_t");
  if (c.metrics.empty()) fail("experiment.metrics", "must list at least one metric");
  if (c.grid_db.empty()) fail("experiment.grid_db", "must not be empty");
  for (std::size_t i = 1; i < c.grid_db.size(); ++i)
    if (!(c.grid_db[i] > c.grid_db[i - 1])) fail("experiment.grid_db", "must be strictly increasing");
  if (c.output.empty()) fail("experiment.output", "must name a file");

  if (c.kind == Kind::BerSweep) {
    if (c.n_frames < 1) fail("ber.n_frames", "must be >= 1");
    if (c.n_iters < 1) fail("ber.n_iters", "must be >= 1");
    if (c.n_symbols < 1) fail("ber.n_symbols", "must be >= 1");
    if (c.system.m_t > 4) fail("system.m_t", "ber_sweep enumerates 16^m_t candidates; m_t must be <= 4");
  } else {
    if (c.system.m_t != c.system.m_r)
      throw UnsupportedError("rate_curves: only square systems are supported (m_t = " +
                             std::to_string(c.system.m_t) + ", m_r = " + std::to_string(c.system.m_r) + ")");
    if (c.n_mc < 1000) fail("rates.n_mc", "must be >= 1000");
    if (c.n_est < 1 || c.n_est > 1000000) fail("rates.n_est", "must lie in [1, 1000000]");
    if (!(c.gamma > 0.0 && c.gamma < 1.0)) fail("rates.gamma", "must lie in (0, 1)");
  }
}

/// Parses the flat INI form written by serialize(). Unknown sections and keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"experiment", {"name", "kind", "seed", "output", "metrics", "grid_db"}},
      {"system", {"m_t", "m_r", "sigma_h_sq", "p_bar", "n_pilots"}},
      {"ber", {"n_frames", "min_errors", "max_frames", "n_iters", "n_symbols", "perfect_csi"}},
      {"rates", {"n_mc", "n_est", "gamma"}},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) detail::fail(section, "key outside any section");
    const auto it = known.find(section);
    if (it == known.end()) detail::fail(section, "unknown section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) detail::fail(section + "." + key, "unknown key");
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto required = [&](const std::string& path) {
    auto v = get(path);
    if (!v) detail::fail(path, "missing");
    return *v;
  };

  ExperimentConfig c;
  if (auto v = get("experiment.name")) c.name = detail::trim(*v);
  c.kind = parse_kind(required("experiment.kind"));
  c.seed = detail::parse_number<std::uint64_t>("experiment.seed", required("experiment.seed"));
  c.output = detail::trim(required("experiment.output"));
  c.grid_db = detail::parse_grid("experiment.grid_db", required("experiment.grid_db"));
  if (auto v = get("experiment.metrics")) {
    c.metrics.clear();
    for (const auto& m : detail::split(*v, ',')) {
      try {
        c.metrics.push_back(parse_metric_kind(m));
      } catch (const ConfigError& e) {
        throw ConfigError("experiment.metrics: unknown kind '" + detail::trim(m) + "'");
      }
    }
  }

  auto set_int = [&](const std::string& path, int& field) {
    if (auto v = get(path)) field = detail::parse_number<int>(path, *v);
  };
  auto set_u64 = [&](const std::string& path, std::uint64_t& field) {
    if (auto v = get(path)) field = detail::parse_number<std::uint64_t>(path, *v);
  };
  auto set_double = [&](const std::string& path, double& field) {
    if (auto v = get(path)) field = detail::parse_number<double>(path, *v);
  };

  set_int("system.m_t", c.system.m_t);
  set_int("system.m_r", c.system.m_r);
  set_double("system.sigma_h_sq", c.system.sigma_h_sq);
  set_double("system.p_bar", c.system.p_bar);
  set_int("system.n_pilots", c.system.n_pilots);
  c.system.p_t = c.system.per_antenna_power();

  set_u64("ber.n_frames", c.n_frames);
  set_u64("ber.min_errors", c.min_errors);
  set_u64("ber.max_frames", c.max_frames);
  set_int("ber.n_iters", c.n_iters);
  set_int("ber.n_symbols", c.n_symbols);
  if (auto v = get("ber.perfect_csi")) c.perfect_csi = detail::parse_bool("ber.perfect_csi", *v);

  set_int("rates.n_mc", c.n_mc);
  set_int("rates.n_est", c.n_est);
  set_double("rates.gamma", c.gamma);

  validate(c);
  return c;
}

inline ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  return parse_config(in);
}

/// Canonical text form; parse_config(serialize(c)) == c for valid configs.
inline std::string serialize(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << c.name << "\n"
     << "kind = " << to_string(c.kind) << "\n"
     << "seed = " << c.seed << "\n"
     << "output = " << c.output << "\n"
     << "metrics = ";
  for (std::size_t i = 0; i < c.metrics.size(); ++i) os << (i ? ", " : "") << to_string(c.metrics[i]);
  os << "\ngrid_db = ";
  for (std::size_t i = 0; i < c.grid_db.size(); ++i) os << (i ? ", " : "") << format_double(c.grid_db[i]);
  os << "\n\n[system]\n"
     << "m_t = " << c.system.m_t << "\n"
     << "m_r = " << c.system.m_r << "\n"
     << "sigma_h_sq = " << format_double(c.system.sigma_h_sq) << "\n"
     << "p_bar = " << format_double(c.system.p_bar) << "\n"
     << "n_pilots = " << c.system.n_pilots << "\n";
  if (c.kind == Kind::BerSweep) {
    os << "\n[ber]\n"
       << "n_frames = " << c.n_frames << "\n"
       << "min_errors = " << c.min_errors << "\n"
       << "max_frames = " << c.max_frames << "\n"
       << "n_iters = " << c.n_iters << "\n"
       << "n_symbols = " << c.n_symbols << "\n"
       << "perfect_csi = " << (c.perfect_csi ? "true" : "false") << "\n";
  } else {
    os << "\n[rates]\n"
       << "n_mc = " << c.n_mc << "\n"
       << "n_est = " << c.n_est << "\n"
       << "gamma = " << format_double(c.gamma) << "\n";
  }
  return os.str();
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

struct Recipe {
  std::string name;
  std::string summary;
  ExperimentConfig config;
};

inline std::vector<Recipe> recipes() {
  std::vector<Recipe> out;

  ExperimentConfig ber;
  ber.name = "fig1_ber_2x2";
  ber.kind = Kind::BerSweep;
  ber.system = SystemConfig::make(2, 2, 1.0, 1.0, 1.0, 2);
  ber.grid_db = detail::parse_grid("grid_db", "4:1:20");
  ber.seed = 20100101;
  ber.output = "fig1_ber_2x2.csv";
  ber.n_frames = 2000;
  ber.min_errors = 100;
  ber.max_frames = 40000;
  out.push_back({ber.name, "BER vs Eb/N0, 2x2 16-QAM BICM, (7,5) code, 100 symbols/frame, N=2, 4 iterations", ber});

  ExperimentConfig r2;
  r2.name = "fig2_rates_2x2";
  r2.kind = Kind::RateCurves;
  r2.system = SystemConfig::make(2, 2, 1.0, 1.0, 1.0, 2);
  r2.grid_db = detail::parse_grid("grid_db", "0:1:25");
  r2.seed = 20100102;
  r2.output = "fig2_rates_2x2.csv";
  out.push_back({r2.name, "average outage rates vs SNR, 2x2, N=2, gamma=0.01, n_mc=10000, n_est=200", r2});

  ExperimentConfig r4 = r2;
  r4.name = "fig3_rates_4x4";
  r4.system = SystemConfig::make(4, 4, 1.0, 1.0, 1.0, 4);
  r4.seed = 20100103;
  r4.output = "fig3_rates_4x4.csv";
  out.push_back({r4.name, "average outage rates vs SNR, 4x4, N=4, gamma=0.01, n_mc=10000, n_est=200", r4});
  return out;
}

inline ExperimentConfig recipe(const std::string& name) {
  for (const auto& r : recipes())
    if (r.name == name) return r.config;
  std::string known;
  for (const auto& r : recipes()) known += (known.empty() ? "" : ", ") + r.name;
  throw ConfigError("recipe: unknown name '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// Rate curves
// ---------------------------------------------------------------------------

/// Per-estimate outage rates at one SNR plus the perfect-CSI ergodic capacity.
struct RatePoint {
  double snr_db = 0.0;
  std::vector<double> mismatched;  ///< one entry per channel estimate
  std::vector<double> improved;
  std::vector<double> eio;
  MeanEstimate ergodic;

  const std::vector<double>& outage(DecodingMetricKind k) const {
    return k == DecodingMetricKind::Improved ? improved : mismatched;
  }
};

/// Sample mean and its standard error.
inline MeanEstimate mean_estimate(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

/// Config at a total SNR p_bar sigma_h^2 / sigma_z^2, pilots at the data energy per antenna.
inline SystemConfig config_at_snr(const SystemConfig& base, double snr_db) {
  SystemConfig cfg = base;
  cfg.sigma_z_sq = base.p_bar * base.sigma_h_sq / std::pow(10.0, snr_db / 10.0);
  cfg.p_t = base.per_antenna_power();
  return cfg;
}

/// Estimate e at grid point g draws (H, h_hat) and its posterior samples from stream
/// (seed, g 2^32 + e); ergodic batch e uses (seed, g 2^32 + 2^31 + e). The ergodic
/// capacity is the mean of n_est batch means of n_mc draws each.
inline std::vector<RatePoint> run_rate_curves(const ExperimentConfig& c, unsigned threads = 1,
                                              std::ostream* log = nullptr) {
  validate(c);
  if (c.kind != Kind::RateCurves) throw ConfigError("experiment.kind: run_rate_curves needs rate_curves");
  const auto n_est = static_cast<std::size_t>(c.n_est);
  std::vector<RatePoint> out;
  for (std::size_t g = 0; g < c.grid_db.size(); ++g) {
    const SystemConfig cfg = config_at_snr(c.system, c.grid_db[g]);
    RatePoint p;
    p.snr_db = c.grid_db[g];
    p.mismatched.resize(n_est);
    p.improved.resize(n_est);
    p.eio.resize(n_est);
    std::vector<double> ergodic_batches(n_est);
    const std::uint64_t base_id = std::uint64_t{g} << 32;
    parallel_for(n_est, threads, [&](std::size_t e) {
      RngStream rng(c.seed, base_id + e);
      const auto h = sample_channel(cfg, rng);
      const auto est = estimate_channel(h, cfg, rng);
      const auto r = outage_rates(est, c.gamma, cfg, c.n_mc, rng);
      p.mismatched[e] = r.mismatched;
      p.improved[e] = r.improved;
      p.eio[e] = r.eio;
      RngStream erg(c.seed, base_id + (std::uint64_t{1} << 31) + e);
      ergodic_batches[e] = ergodic_capacity_perfect(cfg, c.n_mc, erg).mean;
    });
    p.ergodic = mean_estimate(ergodic_batches);
    if (log)
      *log << "[" << c.name << "] snr " << format_double(p.snr_db) << " dB: mismatched "
           << mean_estimate(p.mismatched).mean << ", improved " << mean_estimate(p.improved).mean << ", eio "
           << mean_estimate(p.eio).mean << ", ergodic " << p.ergodic.mean << " bits\n";
    out.push_back(std::move(p));
  }
  return out;
}

/// SNR (dB) at which a curve first reaches `rate`, by linear interpolation between grid
/// points; NaN when the curve never reaches it inside the grid.
inline double snr_at_rate(const std::vector<double>& snr_db, const std::vector<double>& rates, double rate) {
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] < rate) continue;
    if (i == 0) return rates[0] == rate ? snr_db[0] : std::nan("");
    const double t = (rate - rates[i - 1]) / (rates[i] - rates[i - 1]);
    return snr_db[i - 1] + t * (snr_db[i] - snr_db[i - 1]);
  }
  return std::nan("");
}

// ---------------------------------------------------------------------------
// BER sweep
// ---------------------------------------------------------------------------

inline bicm::BerSweepOptions ber_options(const ExperimentConfig& c, unsigned threads) {
  bicm::BerSweepOptions o;
  o.n_symbols = c.n_symbols;
  o.n_iters = c.n_iters;
  o.n_frames = c.n_frames;
  o.min_errors = c.min_errors;
  o.max_frames = c.max_frames;
  o.threads = threads;
  o.perfect_csi = c.perfect_csi;
  return o;
}

inline std::vector<bicm::BerPoint> run_ber_sweep(const ExperimentConfig& c, unsigned threads = 1,
                                                 std::ostream* log = nullptr) {
  validate(c);
  if (c.kind != Kind::BerSweep) throw ConfigError("experiment.kind: run_ber_sweep needs ber_sweep");
  auto pts = bicm::simulate_ber(c.system, c.metrics, c.grid_db, ber_options(c, threads), c.seed);
  if (log)
    for (const auto& p : pts)
      *log << "[" << c.name << "] ebn0 " << format_double(p.ebn0_db) << " dB " << to_string(p.metric) << ": "
           << p.n_errors << " errors / " << p.n_bits << " bits (" << p.n_frames << " frames)\n";
  return pts;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_csv_preamble(std::ostream& os, const ExperimentConfig& c, std::string_view schema) {
  os << "# cee_sim " << kToolVersion << " schema=" << schema << " config_hash=" << config_hash(c)
     << " recipe=" << c.name << "\n";
}

inline void write_ber_csv(std::ostream& os, const ExperimentConfig& c, const std::vector<bicm::BerPoint>& pts) {
  write_csv_preamble(os, c, kBerSchema);
  os << "ebn0_db,n_bits,n_errors,ber,ci_low,ci_high,metric,n_pilots,seed\n";
  for (const auto& p : pts)
    os << format_double(p.ebn0_db) << ',' << p.n_bits << ',' << p.n_errors << ',' << format_double(p.ber) << ','
       << format_double(p.ci_low) << ',' << format_double(p.ci_high) << ',' << to_string(p.metric) << ','
       << p.n_pilots << ',' << p.seed << '\n';
}

inline void write_rates_csv(std::ostream& os, const ExperimentConfig& c, const std::vector<RatePoint>& pts) {
  write_csv_preamble(os, c, kRatesSchema);
  os << "snr_db,metric,gamma,n_pilots,outage_rate_bits,eio_bits,ergodic_bits,n_mc,seed\n";
  for (const auto& p : pts) {
    const double eio = mean_estimate(p.eio).mean;
    for (const auto m : c.metrics)
      os << format_double(p.snr_db) << ',' << to_string(m) << ',' << format_double(c.gamma) << ','
         << c.system.n_pilots << ',' << format_double(mean_estimate(p.outage(m)).mean) << ','
         << format_double(eio) << ',' << format_double(p.ergodic.mean) << ',' << c.n_mc << ',' << c.seed << '\n';
  }
}

/// Runs the experiment and writes its CSV into out_dir; returns the written path.
inline std::filesystem::path run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                            unsigned threads = 1, std::ostream* log = nullptr) {
  validate(c);
  std::ostringstream csv;
  if (c.kind == Kind::BerSweep)
    write_ber_csv(csv, c, run_ber_sweep(c, threads, log));
  else
    write_rates_csv(csv, c, run_rate_curves(c, threads, log));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto path = out_dir / c.output;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("experiment.output: cannot write '" + path.string() + "'");
  f << csv.str();
  if (!f) throw ConfigError("experiment.output: write failed for '" + path.string() + "'");
  return path;
}

}  // namespace cee::experiment
