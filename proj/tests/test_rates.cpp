#include "cee/rates.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace cee;

namespace {

struct Pair {
  SystemConfig cfg;
  ChannelRealization h;
  ChannelEstimate est;
};

Pair random_pair(RngStream& rng, int m, double snr_db, int n_pilots) {
  auto cfg = SystemConfig::make(m, m, 1.0, std::pow(10.0, -snr_db / 10.0), 1.0, n_pilots);
  auto h = sample_channel(cfg, rng);
  auto est = estimate_channel(h, cfg, rng);
  return {cfg, h, est};
}

// Gamma(-n, t) from the finite alternating expansion, evaluated in long double.
long double gamma_neg_int_literal(unsigned n, long double t) {
  long double e1 = 0.0L;
  {
    boost::math::quadrature::exp_sinh<long double> q;
    e1 = q.integrate([&](long double s) { return std::exp(-(t + s)) / (t + s); }, 0.0L,
                     std::numeric_limits<long double>::infinity());
  }
  long double sum = 0.0L, fact = 1.0L;
  for (unsigned i = 0; i < n; ++i) {
    if (i > 0) fact *= i;
    sum += ((i % 2) ? -1.0L : 1.0L) * fact / std::pow(t, static_cast<long double>(i + 1));
  }
  long double n_fact = 1.0L;
  for (unsigned i = 2; i <= n; ++i) n_fact *= i;
  return ((n % 2) ? -1.0L : 1.0L) / n_fact * (e1 - std::exp(-t) * sum);
}

// Monte Carlo E[(||A X||^2 + k1) / (||X||^2 + k2)], X ~ CN(0, p I).
std::pair<double, double> ratio_monte_carlo(const ComplexMatrix& a, double k1, double k2, double p, long n,
                                             RngStream& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < n; ++i) {
    const ComplexVector x = sample_cgn(ComplexMatrix::Zero(a.cols(), 1), p, rng);
    const double v = ((a * x).squaredNorm() + k1) / (x.squaredNorm() + k2);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  return {mean, std::sqrt((sum_sq / n - mean * mean) / n)};
}

}  // namespace

// ----- ratio expectation ------------------------------------------------------

TEST(RatioExpectation, ZeroMatrixReduction) {
  for (int m : {1, 2, 3, 4}) {
    const double k1 = 0.7, k2 = 1.9, p = 0.8;
    const double t = k2 / p;
    const double expected = k1 / k2 * std::pow(t, m) * std::exp(t) * gamma_neg_int(m - 1, t);
    EXPECT_NEAR(ratio_expectation(ComplexMatrix::Zero(2, m), k1, k2, p, m), expected, 1e-12 * expected);
  }
}

TEST(RatioExpectation, MonteCarloIdentity) {
  RngStream rng(1, 0);
  const auto [mean, se] = ratio_monte_carlo(ComplexMatrix::Identity(2, 2), 1.0, 1.0, 1.0, 1000000, rng);
  EXPECT_NEAR(ratio_expectation(ComplexMatrix::Identity(2, 2), 1.0, 1.0, 1.0, 2), mean, 3.0 * se);
}

TEST(RatioExpectation, Homogeneity) {
  RngStream rng(2, 0);
  const ComplexMatrix a = sample_cgn(ComplexMatrix::Zero(3, 3), 1.0, rng);
  const double c = 1.7, k1 = 2.0, k2 = 0.6, p = 1.3;
  EXPECT_NEAR(ratio_expectation(c * a, k1, k2, p, 3), c * c * ratio_expectation(a, k1 / (c * c), k2, p, 3), 1e-10);
}

TEST(RatioExpectation, RejectsBadArguments) {
  EXPECT_THROW(ratio_expectation(ComplexMatrix::Identity(2, 2), 0.0, 1.0, 1.0, 2), DomainError);
  EXPECT_THROW(ratio_expectation(ComplexMatrix::Identity(2, 3), 1.0, 1.0, 1.0, 2), ConfigError);
}

// ----- test-channel constants -------------------------------------------------

TEST(TestChannel, RejectsNonSquare) {
  auto cfg = SystemConfig::make(2, 3, 1.0, 0.1, 1.0, 2);
  RngStream rng(3, 0);
  const auto h = sample_channel(cfg, rng);
  const auto est = estimate_channel(h, cfg, rng);
  EXPECT_THROW(test_channel_constants(h, est, cfg), UnsupportedError);
}

TEST(TestChannel, HTildeRecoversSingularValuesWhenEstimateIsExact) {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, 10.0, 4);
    p.est.h_hat = p.h.h;
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    for (Eigen::Index i = 0; i < k.h_tilde.size(); ++i) {
      EXPECT_NEAR(k.h_tilde(i).real(), k.lambda_vec(i), 1e-12);
      EXPECT_NEAR(k.h_tilde(i).imag(), 0.0, 1e-12);
    }
  }
}

TEST(TestChannel, DiagonalChannel) {
  auto cfg = SystemConfig::make(2, 2, 1.0, 0.1, 1.0, 2);
  ChannelRealization h{ComplexMatrix::Zero(2, 2)};
  h.h(0, 0) = 0.5;
  h.h(1, 1) = 2.0;
  const auto est = ChannelEstimate::statistics(cfg, h.h);
  const auto k = test_channel_constants(h, est, cfg);
  EXPECT_NEAR(k.lambda_vec(0), 2.0, 1e-14);
  EXPECT_NEAR(k.lambda_vec(1), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(k.h_tilde(0)), 2.0, 1e-14);
  EXPECT_NEAR(std::abs(k.h_tilde(1)), 0.5, 1e-14);
}

TEST(TestChannel, FiniteAndReproducible) {
  RngStream a(5, 0), b(5, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pa = random_pair(a, 2, 15.0, 2);
    const auto pb = random_pair(b, 2, 15.0, 2);
    const auto ka = test_channel_constants(pa.h, pa.est, pa.cfg);
    const auto kb = test_channel_constants(pb.h, pb.est, pb.cfg);
    ASSERT_TRUE(std::isfinite(ka.lambda_n) && std::isfinite(ka.a_m) && std::isfinite(ka.b_m));
    ASSERT_TRUE(all_finite(ka.h_tilde));
    ASSERT_GT(ka.lambda_n, 0.0);
    ASSERT_EQ(ka.a_m, kb.a_m);
    ASSERT_EQ(ka.b_m, kb.b_m);
    ASSERT_EQ(ka.h_tilde, kb.h_tilde);
  }
}

TEST(TestChannel, LambdaMatchesLiteralExpansion) {
  for (int m : {2, 3, 4})
    for (double snr_db : {-5.0, 0.0, 5.0}) {
      auto cfg = SystemConfig::make(m, m, 1.0, std::pow(10.0, -snr_db / 10.0), 1.0, m);
      const auto est = ChannelEstimate::statistics(cfg, ComplexMatrix::Zero(m, m));
      const long double t = cfg.sigma_z_sq / (est.delta * cfg.per_antenna_power() * est.sigma_eps_sq);
      const unsigned n = m - 1;
      const long double literal = std::pow(t, static_cast<long double>(n)) * std::exp(t) * gamma_neg_int_literal(n, t);
      EXPECT_NEAR(lambda_n_value(est, cfg), static_cast<double>(literal), 1e-9 * static_cast<double>(literal))
          << "m = " << m << ", t = " << static_cast<double>(t);
    }
}

TEST(TestChannel, QuadraticCoefficientIsAGammaExpectation) {
  // 1 - k lambda_n - m lambda_n = E[(S - m)/(S + k)] with S ~ Gamma(m, 1).
  boost::math::quadrature::exp_sinh<double> q;
  RngStream rng(6, 0);
  for (int m : {1, 2, 4})
    for (double snr_db : {0.0, 10.0, 25.0}) {
      auto p = random_pair(rng, m, snr_db, m);
      const auto k = test_channel_constants(p.h, p.est, p.cfg);
      const double kk = p.cfg.sigma_z_sq / (p.est.delta * p.cfg.per_antenna_power() * p.est.sigma_eps_sq);
      const double oracle = q.integrate(
          [&](double s) {
            return (s - m) / (s + kk) * std::exp((m - 1) * std::log(s) - s - std::lgamma(double(m)));
          },
          0.0, std::numeric_limits<double>::infinity());
      EXPECT_NEAR(k.quad_coeff, oracle, 1e-9);
      EXPECT_LT(k.quad_coeff, 0.0);
      EXPECT_GT(k.a_m, 0.0);
    }
}

TEST(TestChannel, AmAndBmIdentities) {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, 5.0 + trial % 20, 2 + trial % 3);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    // a_m as delta (1 - t lambda_n) / (m lambda_n + t lambda_n - 1).
    const double t = p.cfg.sigma_z_sq / (p.est.delta * p.cfg.per_antenna_power() * p.est.sigma_eps_sq);
    const double a_alt = p.est.delta * (1.0 - t * k.lambda_n) / (k.m * k.lambda_n + t * k.lambda_n - 1.0);
    EXPECT_NEAR(k.a_m, a_alt, 1e-9 * std::abs(a_alt));
    // In the singular bases of H, b_m = ||lambda + a_m h_tilde||^2.
    const double b_alt = (k.lambda_vec.cast<Complex>() + k.a_m * k.h_tilde).squaredNorm();
    EXPECT_NEAR(k.b_m, b_alt, 1e-9 * std::max(1.0, b_alt));
  }
}

TEST(TestChannel, TrueChannelLiesOnConstraintBoundary) {
  // Upsilon = H, sigma^2 = sigma_z^2 satisfies the metric constraint with equality and C = 0.
  RngStream rng(8, 0);
  auto p = random_pair(rng, 3, 12.0, 3);
  const auto k = test_channel_constants(p.h, p.est, p.cfg);
  const ComplexVector lambda = k.lambda_vec.cast<Complex>();
  EXPECT_NEAR((lambda + k.a_m * k.h_tilde).squaredNorm(), k.b_m, 1e-9 * k.b_m);
  EXPECT_DOUBLE_EQ(test_noise_variance(lambda, k), p.cfg.sigma_z_sq);
  const double hf = p.h.h.squaredNorm();
  EXPECT_NEAR(c_constant(k, hf, hf, p.cfg.sigma_z_sq), 0.0, 1e-12);
}

// ----- worst case -------------------------------------------------------------

namespace {
TestChannelConstants hand_constants(ComplexVector h_tilde, double a_m, double b_m) {
  TestChannelConstants k;
  k.m = static_cast<int>(h_tilde.size());
  k.h_tilde = std::move(h_tilde);
  k.a_m = a_m;
  k.b_m = b_m;
  k.quad_coeff = -0.5;
  k.lambda_vec = RealVector::Constant(k.m, 1.0);
  k.input_variance = 0.5;
  k.sigma_z_sq = 0.1;
  k.u = ComplexMatrix::Identity(k.m, k.m);
  k.v = ComplexMatrix::Identity(k.m, k.m);
  return k;
}
}  // namespace

TEST(MuOptImproved, NegativeBGivesZero) {
  const auto s = mu_opt_improved(hand_constants(ComplexVector::Ones(2), 0.3, -1.0));
  EXPECT_EQ(s.mu_opt, ComplexVector::Zero(2));
  EXPECT_EQ(s.rate_bits, 0.0);
}

TEST(MuOptImproved, BoundaryCollapsesToZero) {
  ComplexVector h(2);
  h << 3.0, 4.0;
  const auto s = mu_opt_improved(hand_constants(h, 0.5, 0.25 * 25.0));
  EXPECT_EQ(s.mu_opt, ComplexVector::Zero(2));
  EXPECT_EQ(s.coefficient, 0.0);
}

TEST(MuOptImproved, DegenerateDirectionIsReported) {
  EXPECT_THROW(mu_opt_improved(hand_constants(ComplexVector::Zero(2), 0.5, 1.0)), DomainError);
  EXPECT_THROW(mu_opt_mismatched(hand_constants(ComplexVector::Zero(2), 0.5, 1.0)), DomainError);
}

TEST(MuOptImproved, IsMinimumNormAdmissiblePoint) {
  // Admissible set: ||mu + a_m h_tilde||^2 >= b_m. Sample it and compare norms.
  RngStream rng(9, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_pair(rng, 2, 5.0 + trial % 20, 2);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    const auto s = mu_opt_improved(k);
    const ComplexVector centre = -k.a_m * k.h_tilde;
    if (!s.origin_feasible) {
      EXPECT_NEAR((s.mu_opt - centre).squaredNorm(), k.b_m, 1e-9 * std::max(1.0, k.b_m));
      EXPECT_GE(s.coefficient, 0.0);
    }
    for (int probe = 0; probe < 200; ++probe) {
      ComplexVector dir = sample_cgn(ComplexMatrix::Zero(2, 1), 1.0, rng);
      dir.normalize();
      const ComplexVector on_sphere = centre + std::sqrt(std::max(0.0, k.b_m)) * dir;
      ASSERT_GE(on_sphere.norm(), s.mu_opt.norm() - 1e-9);
    }
  }
}

TEST(Objective, MonotoneInNormAlongHTilde) {
  RngStream rng(10, 0);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, 10.0, 4);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    const ComplexVector dir = k.h_tilde / k.h_tilde.norm();
    const double cap = k.lambda_vec.norm();
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const ComplexVector mu = (cap * i / 100.0) * dir;
      ASSERT_GT(test_noise_variance(mu, k), 0.0);
      const double f = test_channel_objective(mu, k);
      ASSERT_GE(f, prev - 1e-12);
      prev = f;
    }
  }
}

TEST(NumericMinimizer, AgreesWithClosedFormForScalarChannels) {
  // With one antenna the objective depends on |mu|^2 only, so the minimum-norm
  // point is the exact minimizer.
  RngStream rng(11, 0), starts(11, 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_pair(rng, 1, 0.0 + trial % 25, 1 + trial % 3);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    const auto closed = mu_opt_improved(k);
    const auto num = minimize_test_channel_numeric(k, starts);
    ASSERT_GT(num.starts, 0);
    EXPECT_GE(num.objective, closed.rate_bits - 1e-6) << "trial " << trial;
    EXPECT_LE(num.objective, closed.rate_bits + 1e-6) << "trial " << trial;
  }
}

TEST(NumericMinimizer, ResultIsAdmissible) {
  RngStream rng(12, 0), starts(12, 1);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_pair(rng, 2, 0.0 + trial % 25, 2);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    const auto num = minimize_test_channel_numeric(k, starts);
    const ComplexVector centre = -k.a_m * k.h_tilde;
    EXPECT_GE((num.mu - centre).squaredNorm(), k.b_m - 1e-9 * std::max(1.0, k.b_m));
    EXPECT_LE(num.mu.norm(), k.lambda_vec.norm() * (1.0 + 1e-9));
    // The true channel is admissible, so the minimum never exceeds its capacity.
    EXPECT_LE(num.objective, perfect_csi_capacity(p.h.h, p.cfg) + 1e-9);
  }
}

// ----- mismatched worst case ----------------------------------------------------

TEST(MuOptMismatched, ExactEstimateRecoversChannel) {
  auto cfg = SystemConfig::make(2, 2, 1.0, 0.05, 1.0, 2);
  ChannelRealization h{ComplexMatrix::Zero(2, 2)};
  h.h(0, 0) = 1.4;
  h.h(1, 1) = 0.6;
  const auto est = ChannelEstimate::statistics(cfg, h.h);
  const auto k = test_channel_constants(h, est, cfg);
  const auto s = mu_opt_mismatched(k);
  EXPECT_NEAR(s.mu_opt(0).real(), 1.4, 1e-12);
  EXPECT_NEAR(s.mu_opt(1).real(), 0.6, 1e-12);
  EXPECT_NEAR(s.rate_bits, perfect_csi_capacity(h.h, cfg), 1e-12);
}

TEST(MuOptMismatched, ProjectionOfLambdaOntoHTilde) {
  RngStream rng(13, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, 10.0, 4);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    const auto s = mu_opt_mismatched(k);
    if (s.origin_feasible) continue;
    const Complex inner = (k.lambda_vec.cast<Complex>() - s.mu_opt).dot(k.h_tilde);
    EXPECT_NEAR(inner.real(), 0.0, 1e-10);
  }
}

// ----- rates ------------------------------------------------------------------

TEST(Rates, ZeroMuGivesZeroRate) {
  const auto k = hand_constants(ComplexVector::Ones(2), 0.3, 1.0);
  EXPECT_EQ(test_channel_objective(ComplexVector::Zero(2), k), 0.0);
}

TEST(Rates, DeterminantFormEqualsSumForm) {
  RngStream rng(14, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, 5.0 + trial % 20, 4);
    const auto k = test_channel_constants(p.h, p.est, p.cfg);
    for (auto kind : {DecodingMetricKind::MismatchedML, DecodingMetricKind::Improved}) {
      const auto s = worst_case_solution(k, kind);
      EXPECT_NEAR(achievable_rate_det(s, k), s.rate_bits, 1e-10 * std::max(1.0, s.rate_bits));
    }
  }
}

// The true channel is an admissible test channel, so the worst case can never
// exceed its capacity. The closed forms pick the minimum-norm admissible point,
// which is not always the minimizer when m > 1; see the decisions log.
TEST(Rates, BoundedByPerfectCsiCapacity) {
  RngStream rng(15, 0);
  int violations[2] = {0, 0};
  double worst[2] = {0.0, 0.0};
  for (int trial = 0; trial < 2000; ++trial) {
    auto p = random_pair(rng, 2 + trial % 3, -5.0 + trial % 35, 2 + trial % 3);
    const double cap = perfect_csi_capacity(p.h.h, p.cfg);
    for (int kind = 0; kind < 2; ++kind) {
      const double r =
          achievable_rate(p.h, p.est, kind ? DecodingMetricKind::Improved : DecodingMetricKind::MismatchedML, p.cfg);
      ASSERT_GE(r, 0.0);
      if (r > cap + 1e-9) {
        ++violations[kind];
        worst[kind] = std::max(worst[kind], r - cap);
      }
    }
  }
  EXPECT_EQ(violations[0], 0) << "mismatched exceeds capacity in " << violations[0] << "/2000, worst by "
                              << worst[0] << " bits";
  EXPECT_EQ(violations[1], 0) << "improved exceeds capacity in " << violations[1] << "/2000, worst by " << worst[1]
                              << " bits";
}

TEST(Rates, ScalarChannelsBoundedByCapacity) {
  RngStream rng(26, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    auto p = random_pair(rng, 1, -5.0 + trial % 35, 1 + trial % 3);
    const double cap = perfect_csi_capacity(p.h.h, p.cfg);
    for (auto kind : {DecodingMetricKind::MismatchedML, DecodingMetricKind::Improved})
      ASSERT_LE(achievable_rate(p.h, p.est, kind, p.cfg), cap + 1e-9) << "trial " << trial;
  }
}

TEST(Rates, MismatchedDominatedByCapacityOnAverage) {
  RngStream rng(27, 0);
  double rate = 0.0, cap = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto p = random_pair(rng, 2, 10.0, 2);
    rate += achievable_rate(p.h, p.est, DecodingMetricKind::MismatchedML, p.cfg);
    cap += perfect_csi_capacity(p.h.h, p.cfg);
  }
  EXPECT_LT(rate, cap);
}

TEST(Rates, ImprovedApproachesCapacityAsEstimationErrorVanishes) {
  RngStream rng(16, 0);
  auto cfg = SystemConfig::make(2, 2, 1.0, 0.1, 1.0, 2);
  const auto h = sample_channel(cfg, rng);
  const double cap = perfect_csi_capacity(h.h, cfg);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double p_t : {1.0, 10.0, 100.0, 1000.0}) {
    cfg.p_t = p_t;
    auto est = estimate_channel(h, cfg, rng);
    const double gap = std::abs(cap - achievable_rate(h, est, DecodingMetricKind::Improved, cfg));
    EXPECT_LT(gap, prev_gap * 1.5);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.05);
}

// ----- outage -----------------------------------------------------------------

TEST(Outage, QuantileConvention) {
  EXPECT_EQ(outage_quantile({4.0, 2.0, 1.0, 3.0}, 0.5), 3.0);
  EXPECT_EQ(outage_quantile({4.0, 2.0, 1.0, 3.0}, 0.999999), 4.0);
  RngStream rng(17, 0);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = rng.standard_normal();
  for (double g : {0.01, 0.05, 0.3, 0.77}) {
    const double r = outage_quantile(xs, g);
    const auto below = std::count_if(xs.begin(), xs.end(), [&](double x) { return x < r; });
    const auto below_eps = std::count_if(xs.begin(), xs.end(), [&](double x) { return x < r + 1e-12; });
    EXPECT_LE(double(below) / xs.size(), g);
    EXPECT_GT(double(below_eps) / xs.size(), g);
  }
  EXPECT_THROW(outage_quantile({}, 0.1), ConfigError);
  EXPECT_THROW(outage_quantile({1.0}, 1.0), DomainError);
}

TEST(Outage, RejectsBadArguments) {
  RngStream rng(18, 0);
  auto p = random_pair(rng, 2, 10.0, 2);
  EXPECT_THROW(outage_rate(p.est, 0.0, DecodingMetricKind::Improved, p.cfg, 1000, rng), DomainError);
  EXPECT_THROW(outage_rate(p.est, 0.1, DecodingMetricKind::Improved, p.cfg, 999, rng), ConfigError);
}

TEST(Outage, NondecreasingInGamma) {
  RngStream rng(19, 0);
  auto p = random_pair(rng, 2, 12.0, 2);
  double prev = -1.0;
  for (double g : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
    RngStream draws(19, 1);  // same posterior sample each time
    const double r = outage_rate(p.est, g, DecodingMetricKind::Improved, p.cfg, 2000, draws);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Outage, GammaNearOneGivesMaximum) {
  RngStream rng(20, 0);
  auto p = random_pair(rng, 2, 12.0, 2);
  RngStream a(20, 1), b(20, 1);
  const double r = eio_capacity(p.est, 0.99999, p.cfg, 1000, a);
  double mx = 0.0;
  for (int i = 0; i < 1000; ++i) mx = std::max(mx, perfect_csi_capacity(sample_posterior(p.est, b).h, p.cfg));
  EXPECT_EQ(r, mx);
}

TEST(Outage, SharedDrawsMatchSeparateCalls) {
  RngStream rng(21, 0);
  auto p = random_pair(rng, 2, 12.0, 2);
  RngStream a(21, 1), b(21, 1), c(21, 1), d(21, 1);
  const auto all = outage_rates(p.est, 0.05, p.cfg, 1000, a);
  EXPECT_EQ(all.mismatched, outage_rate(p.est, 0.05, DecodingMetricKind::MismatchedML, p.cfg, 1000, b));
  EXPECT_EQ(all.improved, outage_rate(p.est, 0.05, DecodingMetricKind::Improved, p.cfg, 1000, c));
  EXPECT_EQ(all.eio, eio_capacity(p.est, 0.05, p.cfg, 1000, d));
}

TEST(Outage, OrderingPerEstimate) {
  RngStream rng(22, 0);
  int imp_below_mm = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto p = random_pair(rng, 2, 5.0 + trial % 16, 2);
    RngStream draws(22, 100 + trial);
    const auto r = outage_rates(p.est, 0.01, p.cfg, 4000, draws);
    EXPECT_GE(r.eio, r.improved) << "trial " << trial;
    if (r.improved < r.mismatched) ++imp_below_mm;
  }
  EXPECT_EQ(imp_below_mm, 0);
}

TEST(Outage, EioCollapsesToCapacityAtEstimate) {
  auto cfg = SystemConfig::make(2, 2, 1.0, 0.1, 1.0, 2);
  cfg.p_t = 1e9;
  RngStream rng(23, 0);
  const auto h = sample_channel(cfg, rng);
  const auto est = estimate_channel(h, cfg, rng);
  const double r = eio_capacity(est, 0.01, cfg, 1000, rng);
  EXPECT_NEAR(r, perfect_csi_capacity(est.h_hat, cfg), 1e-3);
}

// ----- ergodic ----------------------------------------------------------------

TEST(Ergodic, ScalarMatchesQuadrature) {
  for (double snr_db : {10.0, 40.0}) {
    auto cfg = SystemConfig::make(1, 1, 1.0, std::pow(10.0, -snr_db / 10.0), 1.0, 1);
    const double snr = 1.0 / cfg.sigma_z_sq;
    boost::math::quadrature::exp_sinh<double> q;
    const double oracle = q.integrate([&](double x) { return std::log2(1.0 + snr * x) * std::exp(-x); }, 0.0,
                                      std::numeric_limits<double>::infinity());
    RngStream rng(24, 0);
    const auto e = ergodic_capacity_perfect(cfg, 200000, rng);
    EXPECT_NEAR(e.mean, oracle, 4.0 * e.std_error);
    if (snr_db == 40.0)  // high-SNR form log2(snr) - Euler gamma / ln 2
      EXPECT_NEAR(oracle, std::log2(snr) - std::numbers::egamma / std::log(2.0), 0.005);
  }
}

TEST(Ergodic, IncreasingInSnr) {
  double prev = -1.0;
  for (double snr_db = 0.0; snr_db <= 30.0; snr_db += 5.0) {
    auto cfg = SystemConfig::make(2, 2, 1.0, std::pow(10.0, -snr_db / 10.0), 1.0, 2);
    RngStream rng(25, 0);  // common random numbers
    const double c = ergodic_capacity_perfect(cfg, 2000, rng).mean;
    EXPECT_GT(c, prev);
    prev = c;
  }
  RngStream rng(25, 0);
  EXPECT_THROW(ergodic_capacity_perfect(SystemConfig::make(2, 2, 1.0, 1.0, 1.0, 2), 999, rng), ConfigError);
}
