#pragma once

// Per-letter decoding metrics over (x, y, h_hat). Costs use natural logarithms.

#include "cee/channel.hpp"
#include "cee/numerics.hpp"

#include <cmath>
#include <span>
#include <string_view>

namespace cee {

enum class DecodingMetricKind { MismatchedML, Improved };

inline std::string_view to_string(DecodingMetricKind k) {
  return k == DecodingMetricKind::Improved ? "improved" : "mismatched";
}

inline DecodingMetricKind parse_metric_kind(std::string_view s) {
  if (s == "improved") return DecodingMetricKind::Improved;
  if (s == "mismatched") return DecodingMetricKind::MismatchedML;
  throw ConfigError("metric: unknown kind '" + std::string(s) + "' (expected improved|mismatched)");
}

namespace detail {
inline void check_shapes(const ComplexVector& x, const ComplexVector& y, const ComplexMatrix& h_hat) {
  if (h_hat.cols() != x.size() || h_hat.rows() != y.size())
    throw ConfigError("metric: dimension mismatch between x, y and h_hat");
}
}  // namespace detail

/// Euclidean distance ||y - h_hat x||^2, the estimate plugged in for the channel.
inline double metric_mismatched(const ComplexVector& x, const ComplexVector& y,
                                const ChannelEstimate& est) {
  detail::check_shapes(x, y, est.h_hat);
  return (y - est.h_hat * x).squaredNorm();
}

/// Negative log-likelihood of the channel averaged over the estimation error,
///   m_r log(s(x)) + ||y - delta h_hat x||^2 / s(x),  s(x) = sigma_z^2 + delta sigma_eps^2 ||x||^2,
/// i.e. -log of a CN(delta h_hat x, s(x) I) density without the m_r log(pi) term.
inline double metric_improved(const ComplexVector& x, const ComplexVector& y,
                              const ChannelEstimate& est, const SystemConfig& cfg) {
  detail::check_shapes(x, y, est.h_hat);
  const double s = cfg.sigma_z_sq + est.delta * est.sigma_eps_sq * x.squaredNorm();
  if (!(s > 0.0)) throw DomainError("metric_improved: non-positive composite variance");
  return static_cast<double>(y.size()) * std::log(s) + (y - est.delta * est.h_hat * x).squaredNorm() / s;
}

/// Cost fed to the soft demapper: -log W(y|x, .) up to a candidate-independent constant.
/// For the mismatched receiver this is the Euclidean distance over sigma_z^2, the
/// Gaussian likelihood with h_hat in place of H.
inline double demapper_cost(DecodingMetricKind kind, const ComplexVector& x, const ComplexVector& y,
                            const ChannelEstimate& est, const SystemConfig& cfg) {
  if (kind == DecodingMetricKind::Improved) return metric_improved(x, y, est, cfg);
  return metric_mismatched(x, y, est) / cfg.sigma_z_sq;
}

inline double letter_cost(DecodingMetricKind kind, const ComplexVector& x, const ComplexVector& y,
                          const ChannelEstimate& est, const SystemConfig& cfg) {
  return kind == DecodingMetricKind::Improved ? metric_improved(x, y, est, cfg)
                                              : metric_mismatched(x, y, est);
}

/// Additive sequence metric: the arithmetic mean of the per-letter costs.
inline double sequence_cost(DecodingMetricKind kind, std::span<const ComplexVector> xs,
                            std::span<const ComplexVector> ys, const ChannelEstimate& est,
                            const SystemConfig& cfg) {
  if (xs.size() != ys.size()) throw ConfigError("sequence_cost: sequence length mismatch");
  if (xs.empty()) throw ConfigError("sequence_cost: empty sequence");
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += letter_cost(kind, xs[i], ys[i], est, cfg);
  return sum / static_cast<double>(xs.size());
}

}  // namespace cee
