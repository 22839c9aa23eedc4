#pragma once

#include "cee/bicm/beliefs.hpp"
#include "cee/bicm/conv_code.hpp"
#include "cee/numerics.hpp"

#include <array>
#include <vector>

namespace cee::bicm {

struct SisoOutput {
  BitBeliefs coded_extrinsic;  ///< a-posteriori over coded bits with each bit's own prior divided out
  BitBeliefs info_posterior;   ///< a-posteriori over info bits
};

/// Forward-backward (BCJR) decoding of a zero-terminated frame. Info bits have
/// uniform priors; the two tail inputs are known zeros.
///
/// Runs in the probability domain with alpha and beta rescaled to sum to one at
/// every step. This is exact MAP, like the log-domain form with the Jacobian
/// logarithm, and needs no transcendental calls in the inner loop. Priors are
/// clamped to [1e-12, 1 - 1e-12], so branch weights never underflow.
inline SisoOutput siso_decode(const BitBeliefs& coded_prior, const ConvCode& code = kCode57) {
  constexpr int S = ConvCode::n_states;
  constexpr int O = ConvCode::n_outputs;
  const std::size_t steps = coded_prior.size() / O;
  if (coded_prior.size() % O != 0 || steps <= ConvCode::memory)
    throw ConfigError("siso_decode: belief length does not match a terminated trellis");
  const std::size_t k = steps - ConvCode::memory;

  std::vector<std::array<double, 2>> pr(coded_prior.size());
  for (std::size_t i = 0; i < coded_prior.size(); ++i) {
    const double p = clamp_prob(coded_prior.p_one[i]);
    pr[i] = {1.0 - p, p};
  }
  auto branch = [&](std::size_t t, int s, int u) {
    double g = 1.0;
    for (int o = 0; o < O; ++o) g *= pr[t * O + o][code.output(s, u, o)];
    return g;
  };
  auto inputs = [&](std::size_t t) { return t < k ? 2 : 1; };
  auto normalize = [](std::array<double, S>& m) {
    double sum = 0.0;
    for (double v : m) sum += v;
    for (auto& v : m) v /= sum;
  };

  using Metric = std::array<double, S>;
  std::vector<Metric> alpha(steps + 1), beta(steps + 1);
  alpha[0].fill(0.0);
  alpha[0][0] = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    Metric next{};
    for (int s = 0; s < S; ++s) {
      if (alpha[t][s] == 0.0) continue;
      for (int u = 0; u < inputs(t); ++u) next[code.next_state(s, u)] += alpha[t][s] * branch(t, s, u);
    }
    normalize(next);
    alpha[t + 1] = next;
  }
  beta[steps].fill(0.0);
  beta[steps][0] = 1.0;
  for (std::size_t t = steps; t-- > 0;) {
    Metric cur{};
    for (int s = 0; s < S; ++s)
      for (int u = 0; u < inputs(t); ++u) cur[s] += beta[t + 1][code.next_state(s, u)] * branch(t, s, u);
    normalize(cur);
    beta[t] = cur;
  }

  SisoOutput out{BitBeliefs{std::vector<double>(coded_prior.size())}, BitBeliefs{std::vector<double>(k)}};
  for (std::size_t t = 0; t < steps; ++t) {
    double info_mass[2] = {0.0, 0.0};
    double coded_mass[O][2] = {};
    for (int s = 0; s < S; ++s) {
      if (alpha[t][s] == 0.0) continue;
      for (int u = 0; u < inputs(t); ++u) {
        const double total = alpha[t][s] * branch(t, s, u) * beta[t + 1][code.next_state(s, u)];
        info_mass[u] += total;
        for (int o = 0; o < O; ++o) {
          const int b = code.output(s, u, o);
          coded_mass[o][b] += total / pr[t * O + o][b];
        }
      }
    }
    auto ratio = [](double one, double zero) { return one + zero > 0.0 ? one / (one + zero) : 0.5; };
    if (t < k) out.info_posterior.p_one[t] = ratio(info_mass[1], info_mass[0]);
    for (int o = 0; o < O; ++o) out.coded_extrinsic.p_one[t * O + o] = ratio(coded_mass[o][1], coded_mass[o][0]);
  }
  return out;
}

}  // namespace cee::bicm
