// How much rate does training cost? For a 2x2 link at a few SNRs, prints the
// 1% outage rate of both decoders against the rate achievable with known H.

#include "cee/rates.hpp"

#include <cmath>
#include <cstdio>

using namespace cee;

int main() {
  const int n_est = 20, n_mc = 2000;
  const double gamma = 0.01;
  std::printf("%6s %4s %12s %12s %12s %12s\n", "snr_db", "N", "mismatched", "improved", "eio", "ergodic");
  for (double snr_db : {5.0, 10.0, 20.0}) {
    for (int n_pilots : {2, 8}) {
      const auto cfg = SystemConfig::make(2, 2, 1.0, std::pow(10.0, -snr_db / 10.0), 1.0, n_pilots);
      RngStream rng(2024, static_cast<std::uint64_t>(snr_db) * 16 + n_pilots);
      double mm = 0.0, imp = 0.0, eio = 0.0;
      for (int e = 0; e < n_est; ++e) {
        const auto h = sample_channel(cfg, rng);
        const auto est = estimate_channel(h, cfg, rng);
        const auto r = outage_rates(est, gamma, cfg, n_mc, rng);
        mm += r.mismatched / n_est;
        imp += r.improved / n_est;
        eio += r.eio / n_est;
      }
      const auto erg = ergodic_capacity_perfect(cfg, 20000, rng);
      std::printf("%6.1f %4d %12.3f %12.3f %12.3f %12.3f\n", snr_db, n_pilots, mm, imp, eio, erg.mean);
    }
  }
}
