#pragma once

#include "cee/bicm/receiver.hpp"
#include "cee/channel.hpp"
#include "cee/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cee::bicm {

inline constexpr double kCodeRate = 0.5;
inline constexpr int kBitsPerQamPoint = 4;

/// Noise variance for a target Eb/N0 under the fixed convention
///   Eb/N0 = SNR / (R_c * b * m_t),  SNR = p_bar sigma_h^2 / sigma_z^2,
/// with R_c = 1/2 and b = 4 coded bits per 16-QAM point. Pilot energy is not charged to Eb.
inline double sigma_z_sq_for_ebn0(double ebn0_db, const SystemConfig& cfg) {
  const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
  return cfg.p_bar * cfg.sigma_h_sq / (ebn0 * kCodeRate * kBitsPerQamPoint * cfg.m_t);
}

/// Config at a given Eb/N0 with pilot energy equal to the data energy per antenna.
inline SystemConfig config_at_ebn0(const SystemConfig& base, double ebn0_db) {
  SystemConfig cfg = base;
  cfg.sigma_z_sq = sigma_z_sq_for_ebn0(ebn0_db, base);
  cfg.p_t = cfg.p_bar / cfg.m_t;
  return cfg;
}

struct WilsonInterval {
  double low;
  double high;
};

/// Wilson score interval for a binomial proportion (default 95%).
inline WilsonInterval wilson_interval(std::uint64_t errors, std::uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {errors == 0 ? 0.0 : std::max(0.0, centre - half), errors == trials ? 1.0 : std::min(1.0, centre + half)};
}

struct BerPoint {
  double ebn0_db = 0.0;
  DecodingMetricKind metric = DecodingMetricKind::Improved;
  int n_pilots = 0;
  std::uint64_t n_frames = 0;
  std::uint64_t n_bits = 0;
  std::uint64_t n_errors = 0;
  double ber = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t seed = 0;
};

struct BerSweepOptions {
  int n_symbols = kDefaultSymbolsPerFrame;
  int n_iters = kDefaultIterations;
  std::uint64_t n_frames = 100;  ///< frames per point (minimum when min_errors > 0)
  std::uint64_t min_errors = 0;  ///< keep adding frames until every metric has this many errors
  std::uint64_t max_frames = 0;  ///< cap when min_errors > 0 (0 = n_frames, no extension)
  std::uint64_t batch = 64;      ///< frames per extension batch
  unsigned threads = 1;
  bool perfect_csi = false;      ///< receiver uses h itself with sigma_eps^2 = 0
};

/// Error counts of one frame for each metric. The frame's randomness (info bits,
/// interleaver, channel, estimate, noise) comes from one stream and is shared by
/// all metrics, so metric comparisons are paired.
inline std::vector<std::uint64_t> simulate_frame(const SystemConfig& cfg, std::span<const DecodingMetricKind> metrics,
                                                 const CompoundConstellation& cc, const BerSweepOptions& opt,
                                                 RngStream rng) {
  const std::size_t k = info_bits_per_frame(static_cast<std::size_t>(opt.n_symbols), cc);
  Bits info(k);
  for (auto& b : info) b = static_cast<std::uint8_t>(rng.bits() & 1);
  const std::uint64_t perm_seed = rng.bits();
  const Frame frame = make_frame(std::move(info), cc, perm_seed);
  const Interleaver pi(frame.coded_bits.size(), perm_seed);

  const auto h = sample_channel(cfg, rng);
  ChannelEstimate est = opt.perfect_csi ? ChannelEstimate::perfect(h.h) : estimate_channel(h, cfg, rng);
  std::vector<ComplexVector> ys;
  ys.reserve(frame.symbols.size());
  for (const auto& x : frame.symbols) ys.push_back(apply_channel(h, x, cfg, rng));

  std::vector<std::uint64_t> errors(metrics.size(), 0);
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    const auto r = iterate_receiver(ys, est, metrics[m], cfg, opt.n_iters, pi, cc);
    for (std::size_t i = 0; i < k; ++i) errors[m] += r.decisions[i] != frame.info_bits[i];
  }
  return errors;
}

/// BER versus Eb/N0 for each metric on common frames. Frame f of grid point g draws
/// from stream (seed, g * 2^32 + f) whatever the worker count.
inline std::vector<BerPoint> simulate_ber(const SystemConfig& base, std::span<const DecodingMetricKind> metrics,
                                          std::span<const double> ebn0_grid, const BerSweepOptions& opt,
                                          std::uint64_t seed) {
  if (opt.n_frames < 1) throw ConfigError("n_frames: must be >= 1");
  const auto cc = CompoundConstellation::build(qam16_gray(base.per_antenna_power()), base.m_t);
  const std::size_t k = info_bits_per_frame(static_cast<std::size_t>(opt.n_symbols), cc);
  const std::uint64_t max_frames = opt.min_errors > 0 ? std::max(opt.max_frames, opt.n_frames) : opt.n_frames;

  std::vector<BerPoint> out;
  for (std::size_t g = 0; g < ebn0_grid.size(); ++g) {
    const SystemConfig cfg = config_at_ebn0(base, ebn0_grid[g]);
    std::vector<std::uint64_t> errors(metrics.size(), 0);
    std::uint64_t done = 0;
    auto run = [&](std::uint64_t count) {
      std::vector<std::vector<std::uint64_t>> per_frame(count);
      parallel_for(count, opt.threads, [&](std::size_t i) {
        per_frame[i] = simulate_frame(cfg, metrics, cc, opt, RngStream(seed, (std::uint64_t{g} << 32) + done + i));
      });
      for (const auto& e : per_frame)
        for (std::size_t m = 0; m < metrics.size(); ++m) errors[m] += e[m];
      done += count;
    };
    run(opt.n_frames);
    auto short_of_errors = [&] {
      for (auto e : errors)
        if (e < opt.min_errors) return true;
      return false;
    };
    while (opt.min_errors > 0 && done < max_frames && short_of_errors()) run(std::min(opt.batch, max_frames - done));

    for (std::size_t m = 0; m < metrics.size(); ++m) {
      BerPoint p;
      p.ebn0_db = ebn0_grid[g];
      p.metric = metrics[m];
      p.n_pilots = base.n_pilots;
      p.n_frames = done;
      p.n_bits = done * k;
      p.n_errors = errors[m];
      p.ber = static_cast<double>(p.n_errors) / static_cast<double>(p.n_bits);
      const auto ci = wilson_interval(p.n_errors, p.n_bits);
      p.ci_low = ci.low;
      p.ci_high = ci.high;
      p.seed = seed;
      out.push_back(p);
    }
  }
  return out;
}

/// Single-metric convenience form.
inline std::vector<BerPoint> simulate_ber(const SystemConfig& base, DecodingMetricKind metric,
                                          std::span<const double> ebn0_grid, const BerSweepOptions& opt,
                                          std::uint64_t seed) {
  const DecodingMetricKind one[] = {metric};
  return simulate_ber(base, std::span<const DecodingMetricKind>(one), ebn0_grid, opt, seed);
}

}  // namespace cee::bicm
