#pragma once

// Achievable and outage rates of the mismatched and improved receivers under a
// Gaussian input with covariance (p_bar / m_t) I, together with the
// perfect-CSI references (estimation-induced outage capacity, ergodic capacity).
//
// Conventions: rates are in bits (log2); the per-antenna input power
// p = p_bar / m_t plays the role of the input variance everywhere, so the
// instantaneous perfect-CSI capacity is log2 det(I + p H H^H / sigma_z^2).

#include "cee/channel.hpp"
#include "cee/metrics.hpp"
#include "cee/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace cee {

// ---------------------------------------------------------------------------
// Closed-form expectation
// ---------------------------------------------------------------------------

/// E[(||A X||^2 + k1) / (||X||^2 + k2)] for X ~ CN(0, input_variance I_{m_t}):
///   ||A||_F^2/m + (k1/k2 - ||A||_F^2/m) (k2/P)^m e^{k2/P} Gamma(1 - m, k2/P),  m = m_t.
/// The identity follows from E[||AX||^2 | ||X||] = ||A||_F^2 ||X||^2 / m and
/// ||X||^2 / P ~ Gamma(m, 1).
inline double ratio_expectation(const ComplexMatrix& a, double k1, double k2, double input_variance, int m_t) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw DomainError("ratio_expectation: k1 and k2 must be > 0");
  if (!(input_variance > 0.0)) throw DomainError("ratio_expectation: input variance must be > 0");
  if (m_t < 1 || a.cols() != m_t) throw ConfigError("ratio_expectation: A must have m_t columns");
  const unsigned n = static_cast<unsigned>(m_t - 1);
  const double t = k2 / input_variance;
  const double frob = a.squaredNorm() / m_t;
  return frob + (k1 / k2 - frob) * std::pow(t, n + 1) * gamma_neg_int_scaled(n, t);
}

// ---------------------------------------------------------------------------
// Test-channel constants
// ---------------------------------------------------------------------------

/// Quantities that define the worst-case test channel for one (H, h_hat) pair.
///
/// With m = m_t, p the input variance, k = sigma_z^2 / (delta p sigma_eps^2) and
/// lambda_n = k^n e^k Gamma(-n, k), n = m - 1, the expected-metric constraint of
/// a test channel Y = Upsilon X + CN(0, sigma^2 I), after eliminating sigma^2 with
/// the output-power constraint, reads
///   quad_coeff * (||Upsilon + a_m h_hat||_F^2 - ||H + a_m h_hat||_F^2) <= 0,
///   quad_coeff = 1 - k lambda_n - m lambda_n,
///   a_m = delta (1 - k lambda_n) / (m lambda_n + k lambda_n - 1).
/// quad_coeff equals E[(S - m)/(S + k)] for S ~ Gamma(m), which is negative, so the
/// admissible set lies outside the ball. Restricting Upsilon = U diag(mu) V^H with
/// H = U diag(lambda) V^H gives ||mu + a_m h_tilde||^2 >= b_m with
/// h_tilde = diag(U^H h_hat V).
struct TestChannelConstants {
  double lambda_n = 0.0;
  double a_m = 0.0;
  double c_const = 0.0;     ///< extra constant of the metric constraint; zero once output power is matched
  double b_m = 0.0;
  double quad_coeff = 0.0;  ///< 1 - k lambda_n - m lambda_n
  ComplexVector h_tilde;
  RealVector lambda_vec;    ///< singular values of H
  ComplexMatrix u;          ///< left singular vectors of H
  ComplexMatrix v;          ///< right singular vectors of H
  double input_variance = 0.0;
  double sigma_z_sq = 0.0;
  int m = 0;

  /// Re sum_i lambda_i h_tilde_i = Re tr(H^H h_hat): the mismatched receiver's threshold.
  double ml_threshold() const {
    Complex s = 0.0;
    for (Eigen::Index i = 0; i < lambda_vec.size(); ++i) s += lambda_vec(i) * h_tilde(i);
    return s.real();
  }
};

/// lambda_n = k^n e^k Gamma(-n, k) at k = sigma_z^2 / (delta p sigma_eps^2).
inline double lambda_n_value(const ChannelEstimate& est, const SystemConfig& cfg) {
  const double k = cfg.sigma_z_sq / (est.delta * cfg.per_antenna_power() * est.sigma_eps_sq);
  const unsigned n = static_cast<unsigned>(cfg.m_t - 1);
  return std::pow(k, n) * gamma_neg_int_scaled(n, k);
}

/// The constant C of the metric constraint evaluated for a candidate test channel
/// (Upsilon, sigma^2 I). It multiplies ||H||^2 - ||Upsilon||^2 + (tr Sigma_0 - tr Sigma)/p,
/// which the output-power constraint forces to zero.
inline double c_constant(const TestChannelConstants& k, double h_frob_sq, double upsilon_frob_sq, double sigma_sq) {
  const double tr0 = k.m * k.sigma_z_sq;
  const double tr = k.m * sigma_sq;
  return k.m * k.lambda_n * (h_frob_sq - upsilon_frob_sq + (tr0 - tr) / k.input_variance) / k.quad_coeff;
}

inline TestChannelConstants test_channel_constants(const ChannelRealization& h, const ChannelEstimate& est,
                                                   const SystemConfig& cfg) {
  if (cfg.m_t != cfg.m_r) throw UnsupportedError("rates: only square systems (m_t == m_r) are supported");
  if (h.h.rows() != cfg.m_r || h.h.cols() != cfg.m_t || est.h_hat.rows() != cfg.m_r || est.h_hat.cols() != cfg.m_t)
    throw ConfigError("rates: matrix shapes do not match config");
  if (!(est.sigma_eps_sq > 0.0)) throw DomainError("rates: sigma_eps^2 must be > 0 (use the perfect-CSI capacity)");

  TestChannelConstants c;
  c.m = cfg.m_t;
  c.input_variance = cfg.per_antenna_power();
  c.sigma_z_sq = cfg.sigma_z_sq;

  const double p = c.input_variance;
  const double delta = est.delta;
  const double s_eps = est.sigma_eps_sq;
  c.lambda_n = lambda_n_value(est, cfg);
  // a_m as a ratio of (delta s_eps p - lambda_n sigma_z^2) and
  // (m delta s_eps lambda_n p + lambda_n sigma_z^2 - delta s_eps p).
  const double num = delta * (delta * s_eps * p - c.lambda_n * cfg.sigma_z_sq);
  const double den = c.m * delta * s_eps * c.lambda_n * p + c.lambda_n * cfg.sigma_z_sq - delta * s_eps * p;
  c.a_m = num / den;
  const double k = cfg.sigma_z_sq / (delta * p * s_eps);
  c.quad_coeff = 1.0 - k * c.lambda_n - c.m * c.lambda_n;

  const auto dec = svd(h.h);
  c.u = dec.u;
  c.v = dec.v;
  c.lambda_vec = dec.singular_values;
  const ComplexMatrix h_rot = dec.u.adjoint() * est.h_hat * dec.v;
  c.h_tilde = h_rot.diagonal();
  c.b_m = (h.h + c.a_m * est.h_hat).squaredNorm() -
          c.a_m * c.a_m * (h_rot.squaredNorm() - c.h_tilde.squaredNorm());
  c.c_const = 0.0;
  return c;
}

// ---------------------------------------------------------------------------
// Worst-case test channel
// ---------------------------------------------------------------------------

/// sigma^2(mu) = (p / m_r)(||lambda||^2 - ||mu||^2) + sigma_z^2.
inline double test_noise_variance(const ComplexVector& mu, const TestChannelConstants& k) {
  return k.input_variance / k.m * (k.lambda_vec.squaredNorm() - mu.squaredNorm()) + k.sigma_z_sq;
}

/// Mutual information of the diagonalized test channel, sum_i log2(1 + p |mu_i|^2 / sigma^2(mu)).
inline double test_channel_objective(const ComplexVector& mu, const TestChannelConstants& k) {
  const double s2 = test_noise_variance(mu, k);
  if (!(s2 > 0.0)) throw DomainError("test channel: sigma^2(mu) must be > 0");
  double r = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) r += std::log2(1.0 + k.input_variance * std::norm(mu(i)) / s2);
  return r;
}

struct TestChannelSolution {
  ComplexVector mu_opt;
  double sigma_sq_mu = 0.0;
  double rate_bits = 0.0;
  double coefficient = 0.0;  ///< scalar multiplying h_tilde in the closed form
  bool origin_feasible = false;  ///< Upsilon = 0 is admissible, so the rate is zero
};

namespace detail {
inline TestChannelSolution finish(ComplexVector mu, double coefficient, bool origin_feasible,
                                  const TestChannelConstants& k) {
  TestChannelSolution s;
  s.mu_opt = std::move(mu);
  s.coefficient = coefficient;
  s.origin_feasible = origin_feasible;
  s.sigma_sq_mu = test_noise_variance(s.mu_opt, k);
  s.rate_bits = test_channel_objective(s.mu_opt, k);
  return s;
}
}  // namespace detail

/// Worst-case mu for the improved metric:
///   mu = (sqrt(b_m)/||h_tilde|| - |a_m|) h_tilde  if b_m >= 0 and the coefficient is >= 0,
///   mu = 0                                         otherwise.
/// A negative coefficient means the origin already lies outside the constraint ball
/// (Upsilon = 0 is admissible), so the rate is zero there as well.
inline TestChannelSolution mu_opt_improved(const TestChannelConstants& k) {
  const Eigen::Index m = k.h_tilde.size();
  if (k.b_m < 0.0) return detail::finish(ComplexVector::Zero(m), 0.0, true, k);
  const double h_norm = k.h_tilde.norm();
  if (h_norm == 0.0) {
    if (k.b_m > 0.0) throw DomainError("mu_opt_improved: h_tilde = 0 leaves the worst-case direction undefined");
    return detail::finish(ComplexVector::Zero(m), 0.0, true, k);
  }
  const double coefficient = std::sqrt(k.b_m) / h_norm - std::abs(k.a_m);
  if (coefficient < 0.0) return detail::finish(ComplexVector::Zero(m), coefficient, true, k);
  return detail::finish(coefficient * k.h_tilde, coefficient, false, k);
}

/// Worst-case mu for the Euclidean metric: the projection of lambda onto h_tilde,
///   mu = Re(sum_i lambda_i h_tilde_i) / ||h_tilde||^2 h_tilde,
/// or zero when that real part is not positive (Upsilon = 0 is then admissible).
inline TestChannelSolution mu_opt_mismatched(const TestChannelConstants& k) {
  const Eigen::Index m = k.h_tilde.size();
  const double h_norm_sq = k.h_tilde.squaredNorm();
  const double threshold = k.ml_threshold();
  if (h_norm_sq == 0.0) throw DomainError("mu_opt_mismatched: h_tilde = 0 leaves the worst-case direction undefined");
  const double coefficient = threshold / h_norm_sq;
  if (coefficient <= 0.0) return detail::finish(ComplexVector::Zero(m), coefficient, true, k);
  return detail::finish(coefficient * k.h_tilde, coefficient, false, k);
}

inline TestChannelSolution worst_case_solution(const TestChannelConstants& k, DecodingMetricKind kind) {
  return kind == DecodingMetricKind::Improved ? mu_opt_improved(k) : mu_opt_mismatched(k);
}

/// Upsilon = U diag(mu) V^H.
inline ComplexMatrix test_channel_matrix(const ComplexVector& mu, const TestChannelConstants& k) {
  ComplexMatrix d = ComplexMatrix::Zero(k.u.cols(), k.v.cols());
  for (Eigen::Index i = 0; i < mu.size(); ++i) d(i, i) = mu(i);
  return k.u * d * k.v.adjoint();
}

/// log2 det(I + p Upsilon Upsilon^H / sigma^2(mu)); equals the objective for diagonalizable Upsilon.
inline double achievable_rate_det(const TestChannelSolution& s, const TestChannelConstants& k) {
  const ComplexMatrix ups = test_channel_matrix(s.mu_opt, k);
  const ComplexMatrix g =
      ComplexMatrix::Identity(ups.rows(), ups.rows()) + (k.input_variance / s.sigma_sq_mu) * ups * ups.adjoint();
  return std::log2(g.determinant().real());
}

// ---------------------------------------------------------------------------
// Numeric cross-check of the worst case
// ---------------------------------------------------------------------------

struct NumericMinimum {
  ComplexVector mu;
  double objective = 0.0;
  int starts = 0;
};

/// Multi-start projected descent of the test-channel objective over
///   { mu : quad_coeff (||mu + a_m h_tilde||^2 - b_m) <= 0 } and { ||mu|| <= ||lambda|| }.
/// Independent of the closed form: it uses only the constraint, never its minimizer,
/// and starts from random admissible points plus mu = lambda (the true channel).
inline NumericMinimum minimize_test_channel_numeric(const TestChannelConstants& k, RngStream& rng,
                                                    int random_starts = 24, int max_steps = 5000) {
  const Eigen::Index m = k.h_tilde.size();
  const ComplexVector centre = -k.a_m * k.h_tilde;
  const double radius_sq = k.b_m;
  const double norm_cap = k.lambda_vec.norm();
  const double tol = 1e-13 * std::max(1.0, std::abs(radius_sq)) * std::abs(k.quad_coeff);

  auto violation = [&](const ComplexVector& mu) { return k.quad_coeff * ((mu - centre).squaredNorm() - radius_sq); };
  auto admissible = [&](const ComplexVector& mu) {
    return violation(mu) <= tol && mu.norm() <= norm_cap * (1.0 + 1e-12);
  };
  // Alternating projections onto the two sets; returns nullopt if they do not settle.
  auto project = [&](ComplexVector mu) -> std::optional<ComplexVector> {
    for (int it = 0; it < 50; ++it) {
      if (violation(mu) > tol && radius_sq > 0.0) {
        const ComplexVector d = mu - centre;
        const double dn = d.norm();
        if (dn == 0.0) return std::nullopt;
        // Exterior constraint pushes out to the sphere, interior pulls in to it.
        mu = centre + std::sqrt(radius_sq) / dn * d;
      }
      if (mu.norm() > norm_cap) mu *= norm_cap / mu.norm();
      if (admissible(mu)) return mu;
    }
    return std::nullopt;
  };
  auto gradient = [&](const ComplexVector& mu) {
    const double p = k.input_variance;
    const double s2 = test_noise_variance(mu, k);
    double shared = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) shared += 1.0 / (s2 + p * std::norm(mu(j))) - 1.0 / s2;
    ComplexVector g(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d_dm = (p / (s2 + p * std::norm(mu(i))) - p / k.m * shared) / std::log(2.0);
      g(i) = 2.0 * d_dm * mu(i);
    }
    return g;
  };

  std::vector<ComplexVector> starts;
  starts.push_back(k.lambda_vec.cast<Complex>());
  if (admissible(ComplexVector::Zero(m))) starts.push_back(ComplexVector::Zero(m));
  for (int s = 0; s < random_starts; ++s) {
    ComplexVector dir(m);
    for (Eigen::Index i = 0; i < m; ++i) dir(i) = Complex(rng.standard_normal(), rng.standard_normal());
    dir.normalize();
    const double r = radius_sq > 0.0 ? std::sqrt(radius_sq) : 0.0;
    if (auto p = project(centre + r * dir)) starts.push_back(*p);
  }

  NumericMinimum best{ComplexVector::Zero(m), std::numeric_limits<double>::infinity(), 0};
  for (auto mu : starts) {
    if (!admissible(mu)) continue;
    ++best.starts;
    double f = test_channel_objective(mu, k);
    double step = 1.0;
    for (int it = 0; it < max_steps && step > 1e-14; ++it) {
      const ComplexVector g = gradient(mu);
      bool moved = false;
      while (step > 1e-14) {
        auto trial = project(mu - step * g);
        if (trial) {
          const double ft = test_channel_objective(*trial, k);
          if (ft < f - 1e-15) {
            mu = *trial;
            f = ft;
            step *= 2.0;
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f < best.objective) best = {mu, f, best.starts};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Instantaneous, outage and ergodic rates
// ---------------------------------------------------------------------------

/// log2 det(I + p H H^H / sigma_z^2).
inline double perfect_csi_capacity(const ComplexMatrix& h, const SystemConfig& cfg) {
  const ComplexMatrix g = ComplexMatrix::Identity(h.rows(), h.rows()) +
                          (cfg.per_antenna_power() / cfg.sigma_z_sq) * h * h.adjoint();
  return std::log2(g.determinant().real());
}

/// Instantaneous achievable rate of a receiver using the given metric when the
/// channel is h and the receiver holds est.
inline double achievable_rate(const ChannelRealization& h, const ChannelEstimate& est, DecodingMetricKind kind,
                              const SystemConfig& cfg) {
  const auto k = test_channel_constants(h, est, cfg);
  return worst_case_solution(k, kind).rate_bits;
}

/// Largest R with empirical P(C < R) <= gamma: the order statistic of rank floor(gamma n) + 1.
inline double outage_quantile(std::vector<double> samples, double gamma) {
  if (samples.empty()) throw ConfigError("outage_quantile: no samples");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("outage_quantile: gamma must lie in (0, 1)");
  const auto n = samples.size();
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n))), n - 1);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(idx), samples.end());
  return samples[idx];
}

/// Outage rates of both receivers and the outage capacity from one set of posterior draws.
struct OutageRates {
  double mismatched = 0.0;
  double improved = 0.0;
  double eio = 0.0;
};

inline void check_outage_args(double gamma, int n_mc) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma: must lie in (0, 1)");
  if (n_mc < 1000) throw ConfigError("n_mc: must be >= 1000");
}

inline OutageRates outage_rates(const ChannelEstimate& est, double gamma, const SystemConfig& cfg, int n_mc,
                                RngStream& rng) {
  check_outage_args(gamma, n_mc);
  std::vector<double> mm(n_mc), imp(n_mc), cap(n_mc);
  for (int i = 0; i < n_mc; ++i) {
    const auto h = sample_posterior(est, rng);
    const auto k = test_channel_constants(h, est, cfg);
    mm[i] = mu_opt_mismatched(k).rate_bits;
    imp[i] = mu_opt_improved(k).rate_bits;
    cap[i] = perfect_csi_capacity(h.h, cfg);
  }
  return {outage_quantile(std::move(mm), gamma), outage_quantile(std::move(imp), gamma),
          outage_quantile(std::move(cap), gamma)};
}

inline double outage_rate(const ChannelEstimate& est, double gamma, DecodingMetricKind kind, const SystemConfig& cfg,
                          int n_mc, RngStream& rng) {
  check_outage_args(gamma, n_mc);
  std::vector<double> r(n_mc);
  for (int i = 0; i < n_mc; ++i) r[i] = achievable_rate(sample_posterior(est, rng), est, kind, cfg);
  return outage_quantile(std::move(r), gamma);
}

/// Outage capacity with the Gaussian input: gamma-quantile of the perfect-CSI
/// mutual information over the posterior of H.
inline double eio_capacity(const ChannelEstimate& est, double gamma, const SystemConfig& cfg, int n_mc,
                           RngStream& rng) {
  check_outage_args(gamma, n_mc);
  std::vector<double> r(n_mc);
  for (int i = 0; i < n_mc; ++i) r[i] = perfect_csi_capacity(sample_posterior(est, rng).h, cfg);
  return outage_quantile(std::move(r), gamma);
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Ergodic capacity with perfect receiver CSI, H ~ CN(0, sigma_h^2) per entry.
inline MeanEstimate ergodic_capacity_perfect(const SystemConfig& cfg, int n_mc, RngStream& rng) {
  if (n_mc < 1000) throw ConfigError("n_mc: must be >= 1000");
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const double c = perfect_csi_capacity(sample_channel(cfg, rng).h, cfg);
    sum += c;
    sum_sq += c * c;
  }
  const double mean = sum / n_mc;
  const double var = std::max(0.0, (sum_sq - n_mc * mean * mean) / (n_mc - 1));
  return {mean, std::sqrt(var / n_mc)};
}

}  // namespace cee
