#pragma once

// Rayleigh block-fading MIMO channel, orthogonal-pilot estimation and the
// posterior of the true channel given its estimate.

#include "cee/numerics.hpp"

#include <cmath>
#include <string>

namespace cee {

/// Physical constants of one link.
struct SystemConfig {
  int m_t = 2;                ///< transmit antennas
  int m_r = 2;                ///< receive antennas
  double sigma_h_sq = 1.0;    ///< fading variance per channel entry
  double sigma_z_sq = 1.0;    ///< noise variance per receive antenna
  double p_bar = 1.0;         ///< total input power, tr E[x x^H]
  int n_pilots = 2;           ///< training length N (pilot vectors per frame)
  double p_t = 0.5;           ///< average pilot energy per antenna and slot

  /// Pilot energy defaults to the data energy per antenna.
  static SystemConfig make(int m_t, int m_r, double sigma_h_sq, double sigma_z_sq, double p_bar,
                           int n_pilots) {
    return SystemConfig{m_t, m_r, sigma_h_sq, sigma_z_sq, p_bar, n_pilots, p_bar / m_t};
  }

  double per_antenna_power() const { return p_bar / m_t; }
  double snr_training() const { return n_pilots * p_t / sigma_z_sq; }

  bool operator==(const SystemConfig&) const = default;

  void validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
      if (!ok) throw ConfigError(std::string(field) + ": " + what);
    };
    require(m_t >= 1, "m_t", "must be >= 1");
    require(m_r >= 1, "m_r", "must be >= 1");
    require(n_pilots >= 1, "n_pilots", "must be >= 1");
    require(sigma_h_sq > 0 && std::isfinite(sigma_h_sq), "sigma_h_sq", "must be finite and > 0");
    require(sigma_z_sq > 0 && std::isfinite(sigma_z_sq), "sigma_z_sq", "must be finite and > 0");
    require(p_bar > 0 && std::isfinite(p_bar), "p_bar", "must be finite and > 0");
    require(p_t > 0 && std::isfinite(p_t), "p_t", "must be finite and > 0");
  }
};

struct ChannelRealization {
  ComplexMatrix h;  // m_r x m_t
};

/// What the receiver knows: the estimate and the error statistics behind it.
struct ChannelEstimate {
  ComplexMatrix h_hat;
  double sigma_eps_sq = 0.0;  ///< per-entry variance of h_hat - h
  double delta = 1.0;         ///< posterior shrinkage sigma_h^2 / (sigma_h^2 + sigma_eps^2)

  /// Statistics implied by orthogonal training under cfg.
  static ChannelEstimate statistics(const SystemConfig& cfg, ComplexMatrix h_hat) {
    const double snr_t = cfg.snr_training();
    return ChannelEstimate{std::move(h_hat), 1.0 / snr_t,
                           snr_t * cfg.sigma_h_sq / (snr_t * cfg.sigma_h_sq + 1.0)};
  }

  /// Receiver with exact channel knowledge.
  static ChannelEstimate perfect(ComplexMatrix h) { return ChannelEstimate{std::move(h), 0.0, 1.0}; }
};

/// Entries i.i.d. CN(0, sigma_h^2). Config validity is the caller's concern.
inline ChannelRealization sample_channel(const SystemConfig& cfg, RngStream& rng) {
  return {sample_cgn(ComplexMatrix::Zero(cfg.m_r, cfg.m_t), cfg.sigma_h_sq, rng)};
}

/// y = H x + z, z ~ CN(0, sigma_z^2 I).
inline ComplexVector apply_channel(const ChannelRealization& h, const ComplexVector& x,
                                   const SystemConfig& cfg, RngStream& rng) {
  if (x.size() != h.h.cols()) throw ConfigError("apply_channel: x length != m_t");
  if (h.h.rows() != cfg.m_r || h.h.cols() != cfg.m_t)
    throw ConfigError("apply_channel: channel shape does not match config");
  ComplexVector y = h.h * x;
  return sample_cgn(y, cfg.sigma_z_sq, rng);
}

/// Estimate from N orthogonal pilot vectors: h_hat = H + E with E white,
/// per-entry variance sigma_z^2 / (N p_t). Pilots are not simulated symbol by symbol;
/// the least-squares error law is drawn directly.
inline ChannelEstimate estimate_channel(const ChannelRealization& h, const SystemConfig& cfg,
                                        RngStream& rng) {
  cfg.validate();
  if (cfg.n_pilots < cfg.m_t)
    throw ConfigError("n_pilots: orthogonal training needs n_pilots >= m_t");
  auto est = ChannelEstimate::statistics(cfg, ComplexMatrix());
  est.h_hat = sample_cgn(h.h, est.sigma_eps_sq, rng);
  return est;
}

/// H | h_hat ~ CN(delta h_hat, delta sigma_eps^2) per entry.
inline ChannelRealization sample_posterior(const ChannelEstimate& est, RngStream& rng) {
  return {sample_cgn(est.delta * est.h_hat, est.delta * est.sigma_eps_sq, rng)};
}

}  // namespace cee
