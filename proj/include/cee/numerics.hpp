#pragma once

// Complex linear algebra, special functions and seeded complex-Gaussian
// sampling shared by the channel, metric, receiver and rate modules.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cee {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised when an argument lies outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Raised for shape mismatches and malformed configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised for configurations the library deliberately does not handle.
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto v = m(i, j);
      if constexpr (requires { v.real(); }) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
      } else {
        if (!std::isfinite(v)) return false;
      }
    }
  return true;
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Deterministic random stream identified by (seed, stream_id).
///
/// Workers that run in parallel each own a stream with a distinct id, so the
/// sample sequence of every Monte Carlo unit depends only on its id and never
/// on scheduling. A stream is not shareable between threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream for a sub-task; children of distinct (parent, index) pairs never collide
  /// with each other for practical purposes.
  RngStream child(std::uint64_t index) const {
    return RngStream(mix(seed_ ^ mix(stream_id_ + 0x632be59bd9b4e019ULL)), index);
  }

  double standard_normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Draws mean + W where the entries of W are i.i.d. CN(0, per_entry_variance):
/// real and imaginary parts each carry half of the variance.
inline ComplexMatrix sample_cgn(const ComplexMatrix& mean, double per_entry_variance, RngStream& rng) {
  if (!(per_entry_variance >= 0.0) || !std::isfinite(per_entry_variance))
    throw DomainError("sample_cgn: variance must be finite and >= 0");
  ComplexMatrix out = mean;
  if (per_entry_variance == 0.0) return out;
  const double sd = std::sqrt(per_entry_variance / 2.0);
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double re = rng.standard_normal();
      const double im = rng.standard_normal();
      out(i, j) += Complex(sd * re, sd * im);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Singular value decomposition
// ---------------------------------------------------------------------------

/// m = u * diag(singular_values) * v^H with full unitary u (rows x rows) and v (cols x cols).
struct SvdResult {
  ComplexMatrix u;
  RealVector singular_values;  // descending, length min(rows, cols)
  ComplexMatrix v;

  ComplexMatrix reconstruct() const {
    ComplexMatrix s = ComplexMatrix::Zero(u.cols(), v.cols());
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) s(i, i) = singular_values(i);
    return u * s * v.adjoint();
  }
};

/// Full complex SVD.
///
/// Phase convention: the first entry of each column of v whose magnitude exceeds
/// 1e-12 is made real and positive, and the matching column of u absorbs the
/// conjugate phase. This pins down diag(u^H A v) for any A, which would otherwise
/// depend on the solver's internal choices.
inline SvdResult svd(const ComplexMatrix& m) {
  if (m.size() == 0) throw DomainError("svd: empty matrix");
  if (!all_finite(m)) throw DomainError("svd: non-finite entry");

  Eigen::JacobiSVD<ComplexMatrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult r{solver.matrixU(), solver.singularValues(), solver.matrixV()};

  // Jacobi output is already sorted; a stable insertion pass keeps equal values in column order.
  const Eigen::Index k = r.singular_values.size();
  for (Eigen::Index i = 1; i < k; ++i) {
    for (Eigen::Index j = i; j > 0 && r.singular_values(j) > r.singular_values(j - 1); --j) {
      std::swap(r.singular_values(j), r.singular_values(j - 1));
      r.u.col(j).swap(r.u.col(j - 1));
      r.v.col(j).swap(r.v.col(j - 1));
    }
  }

  for (Eigen::Index j = 0; j < r.v.cols(); ++j) {
    for (Eigen::Index i = 0; i < r.v.rows(); ++i) {
      const Complex z = r.v(i, j);
      if (std::abs(z) > 1e-12) {
        const Complex phase = std::conj(z) / std::abs(z);
        r.v.col(j) *= phase;
        if (j < r.u.cols()) r.u.col(j) *= phase;
        break;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Exponential integral Gamma(0, t) = E1(t) = int_t^inf e^{-u}/u du, for t > 0.
///
/// Power series below t = 1, modified Lentz continued fraction above. Both
/// converge to full double precision on their side of the split.
inline double exp_integral(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("exp_integral: requires finite t > 0");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_iter = 1000;

  if (t < 1.0) {
    // E1(t) = -gamma - ln t - sum_{k>=1} (-t)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < max_iter; ++k) {
      term *= -t / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < std::abs(sum) * eps) break;
    }
    return -std::numbers::egamma - std::log(t) - sum;
  }

  // E1(t) = e^{-t} / (t + 1 - 1/(t + 3 - 4/(t + 5 - ...)))
  constexpr double tiny = 1e-300;
  double b = t + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h * std::exp(-t);
}

/// e^t Gamma(-n, t) for t > 0, the form in which the incomplete gamma function
/// enters expectations of 1/(||X||^2 + K). Scaling avoids overflow of e^t.
///
/// For t < 1 this evaluates the finite alternating expansion
///   Gamma(-n,t) = (-1)^n/n! [Gamma(0,t) - e^{-t} sum_{i<n} (-1)^i i!/t^{i+1}],
/// whose last term dominates there, so no significant cancellation occurs.
/// For t >= 1 the bracket is the difference of E1(t) and its own truncated
/// asymptotic series and loses digits quickly as t grows; the continued
/// fraction for Gamma(a, t), valid for any real a, is used instead.
inline double gamma_neg_int_scaled(unsigned n, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("gamma_neg_int: requires finite t > 0");

  if (t < 1.0) {
    const double e1 = exp_integral(t);
    if (n == 0) return std::exp(t) * e1;
    double sum = 0.0;
    double factorial = 1.0;  // i!
    double tpow = t;         // t^{i+1}
    for (unsigned i = 0; i < n; ++i) {
      if (i > 0) {
        factorial *= i;
        tpow *= t;
      }
      sum += ((i % 2 == 0) ? 1.0 : -1.0) * factorial / tpow;
    }
    const double n_factorial = factorial * n;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign / n_factorial * (std::exp(t) * e1 - sum);
  }

  // Gamma(a,t) = e^{-t} t^a / (t + 1 - a - 1(1-a)/(t + 3 - a - 2(2-a)/(t + 5 - a - ...)))
  const double a = -static_cast<double>(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = 1e-300;
  double b = t + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return std::exp(a * std::log(t)) * h;
}

/// Upper incomplete gamma function at a non-positive integer order, Gamma(-n, t), t > 0.
/// Gamma(0, t) is the exponential integral itself.
inline double gamma_neg_int(unsigned n, double t) {
  if (n == 0) return exp_integral(t);
  return std::exp(-t) * gamma_neg_int_scaled(n, t);
}

}  // namespace cee
