#pragma once

#include "cee/bicm/beliefs.hpp"
#include "cee/bicm/constellation.hpp"
#include "cee/metrics.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace cee::bicm {

/// Demapper costs of every compound candidate for one received vector, evaluated
/// directly through demapper_cost.
inline std::vector<double> candidate_costs(const ComplexVector& y, const CompoundConstellation& cc,
                                           DecodingMetricKind kind, const ChannelEstimate& est,
                                           const SystemConfig& cfg) {
  std::vector<double> costs(cc.size());
  for (std::size_t c = 0; c < cc.size(); ++c) costs[c] = demapper_cost(kind, cc.points[c], y, est, cfg);
  return costs;
}

/// Both metrics have the form offset_c + scale_c ||y - g_c||^2 with g_c, scale_c and
/// offset_c fixed for a frame (block fading), so they are tabulated once per frame.
class CandidateTable {
 public:
  CandidateTable(const CompoundConstellation& cc, DecodingMetricKind kind, const ChannelEstimate& est,
                 const SystemConfig& cfg)
      : m_r_(static_cast<std::size_t>(est.h_hat.rows())),
        centre_(cc.size() * m_r_),
        scale_(cc.size()),
        offset_(cc.size()) {
    const bool improved = kind == DecodingMetricKind::Improved;
    const ComplexMatrix g = improved ? ComplexMatrix(est.delta * est.h_hat) : est.h_hat;
    for (std::size_t c = 0; c < cc.size(); ++c) {
      const ComplexVector gc = g * cc.points[c];
      for (std::size_t r = 0; r < m_r_; ++r) centre_[c * m_r_ + r] = gc(static_cast<Eigen::Index>(r));
      if (improved) {
        const double s = cfg.sigma_z_sq + est.delta * est.sigma_eps_sq * cc.points[c].squaredNorm();
        if (!(s > 0.0)) throw DomainError("demapper: non-positive composite variance");
        scale_[c] = 1.0 / s;
        offset_[c] = static_cast<double>(m_r_) * std::log(s);
      } else {
        scale_[c] = 1.0 / cfg.sigma_z_sq;
        offset_[c] = 0.0;
      }
    }
  }

  std::size_t size() const { return scale_.size(); }

  void costs(const ComplexVector& y, std::span<double> out) const {
    if (static_cast<std::size_t>(y.size()) != m_r_) throw ConfigError("demapper: y length != m_r");
    for (std::size_t c = 0; c < scale_.size(); ++c) {
      const Complex* g = &centre_[c * m_r_];
      double d = 0.0;
      for (std::size_t r = 0; r < m_r_; ++r) d += std::norm(y(static_cast<Eigen::Index>(r)) - g[r]);
      out[c] = offset_[c] + scale_[c] * d;
    }
  }

  std::vector<double> costs(const ComplexVector& y) const {
    std::vector<double> out(size());
    costs(y, out);
    return out;
  }

 private:
  std::size_t m_r_;
  std::vector<Complex> centre_;
  std::vector<double> scale_;
  std::vector<double> offset_;
};

/// exp(-(cost - min cost)) for every candidate: likelihoods relative to the best one.
/// The shift makes the result invariant to a common offset on all costs.
inline std::vector<double> relative_likelihoods(std::span<const double> costs) {
  const double lowest = *std::min_element(costs.begin(), costs.end());
  std::vector<double> lik(costs.size());
  for (std::size_t c = 0; c < costs.size(); ++c) lik[c] = std::exp(lowest - costs[c]);
  return lik;
}

/// Extrinsic bit probabilities of one compound symbol from relative likelihoods and bit priors.
///
/// For bit j, P(d_j = b) is proportional to the sum over candidates with bit j equal
/// to b of likelihood times the priors of all other bits. The bit's own prior is
/// divided out of the class sum. Priors are clamped to [1e-12, 1 - 1e-12], so the
/// prior product of the best candidate stays far above the double underflow limit.
inline std::vector<double> demap_from_likelihoods(std::span<const double> likelihoods,
                                                  std::span<const double> prior_p_one, int n_bits) {
  if (n_bits < 1 || n_bits > 24 || likelihoods.size() != (std::size_t{1} << n_bits))
    throw ConfigError("demap: likelihood count != 2^bits");
  if (prior_p_one.size() != static_cast<std::size_t>(n_bits)) throw ConfigError("demap: prior count != bits");

  std::vector<double> p1(n_bits), p0(n_bits);  // clamped priors
  for (int j = 0; j < n_bits; ++j) {
    p1[j] = clamp_prob(prior_p_one[j]);
    p0[j] = 1.0 - p1[j];
  }
  // Prior of every candidate label, built one bit at a time.
  std::vector<double> prior(likelihoods.size());
  prior[0] = 1.0;
  for (int j = 0; j < n_bits; ++j) {
    const std::size_t half = std::size_t{1} << j;
    for (std::size_t c = 0; c < half; ++c) {
      prior[c | half] = prior[c] * p1[j];
      prior[c] *= p0[j];
    }
  }

  for (std::size_t c = 0; c < likelihoods.size(); ++c) prior[c] *= likelihoods[c];

  std::vector<double> out(n_bits);
  for (int j = 0; j < n_bits; ++j) {
    // Labels alternate in blocks of 2^j with bit j clear, then set.
    const std::size_t half = std::size_t{1} << j;
    double zeros = 0.0, ones = 0.0;
    for (std::size_t base = 0; base < prior.size(); base += 2 * half)
      for (std::size_t c = base; c < base + half; ++c) {
        zeros += prior[c];
        ones += prior[c + half];
      }
    const double m1 = ones / p1[j];
    const double m0 = zeros / p0[j];
    out[j] = (m1 + m0) > 0.0 ? std::clamp(m1 / (m1 + m0), 0.0, 1.0) : 0.5;
  }
  return out;
}

/// Extrinsic bit probabilities of one compound symbol from candidate costs and bit priors.
inline std::vector<double> demap_from_costs(std::span<const double> costs, std::span<const double> prior_p_one,
                                            int n_bits) {
  if (costs.size() != (std::size_t{1} << n_bits)) throw ConfigError("demap: cost count != 2^bits");
  return demap_from_likelihoods(relative_likelihoods(costs), prior_p_one, n_bits);
}

/// Soft demapping of one received compound symbol against all 2^(bits) candidates.
inline BitBeliefs demap_soft(const ComplexVector& y, const BitBeliefs& priors, const CompoundConstellation& cc,
                             DecodingMetricKind kind, const ChannelEstimate& est, const SystemConfig& cfg) {
  const auto costs = candidate_costs(y, cc, kind, est, cfg);
  return {demap_from_costs(costs, priors.p_one, cc.bits())};
}

}  // namespace cee::bicm
