#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace cee::bicm {

inline constexpr double kProbFloor = 1e-12;

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

/// Per-bit probabilities p(d = 1); p(d = 0) is implied.
struct BitBeliefs {
  std::vector<double> p_one;

  static BitBeliefs uniform(std::size_t n) { return {std::vector<double>(n, 0.5)}; }
  std::size_t size() const { return p_one.size(); }

  double log_p(std::size_t i, int bit) const {
    const double p = clamp_prob(p_one[i]);
    return bit ? std::log(p) : std::log1p(-p);
  }
  double llr(std::size_t i) const {
    const double p = clamp_prob(p_one[i]);
    return std::log(p) - std::log1p(-p);
  }
};

}  // namespace cee::bicm
