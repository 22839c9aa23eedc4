#pragma once

#include "cee/bicm/constellation.hpp"
#include "cee/bicm/conv_code.hpp"
#include "cee/bicm/demapper.hpp"
#include "cee/bicm/interleaver.hpp"
#include "cee/bicm/siso.hpp"

#include <vector>

namespace cee::bicm {

inline constexpr int kDefaultIterations = 4;
inline constexpr int kDefaultSymbolsPerFrame = 100;

/// One transmitted frame: info bits -> coded -> interleaved -> compound symbols.
struct Frame {
  Bits info_bits;
  Bits coded_bits;
  Bits interleaved_bits;
  std::vector<ComplexVector> symbols;
  std::uint64_t permutation_seed = 0;
};

/// Info bits that fill n_symbols compound symbols after rate-1/2 terminated encoding.
inline std::size_t info_bits_per_frame(std::size_t n_symbols, const CompoundConstellation& cc) {
  return ConvCode::info_length(n_symbols * static_cast<std::size_t>(cc.bits()));
}

inline std::vector<ComplexVector> map_frame(std::span<const std::uint8_t> interleaved_bits,
                                            const CompoundConstellation& cc) {
  return map_bits(interleaved_bits, cc);
}

inline Frame make_frame(Bits info_bits, const CompoundConstellation& cc, std::uint64_t permutation_seed) {
  Frame f;
  f.info_bits = std::move(info_bits);
  f.coded_bits = conv_encode(f.info_bits);
  if (f.coded_bits.size() % static_cast<std::size_t>(cc.bits()) != 0)
    throw ConfigError("frame: coded length not a multiple of bits per compound symbol");
  f.permutation_seed = permutation_seed;
  const Interleaver pi(f.coded_bits.size(), permutation_seed);
  f.interleaved_bits = pi.interleave(f.coded_bits);
  f.symbols = map_frame(f.interleaved_bits, cc);
  return f;
}

struct ReceiverResult {
  Bits decisions;               ///< hard decisions on info bits
  BitBeliefs info_posterior;
  BitBeliefs demapper_extrinsic;  ///< last demapper output, interleaved order
  BitBeliefs decoder_extrinsic;   ///< last decoder output, coded order
};

/// Iterative BICM receiver: soft demapping and BCJR decoding exchange extrinsic
/// beliefs n_iters times, starting from uniform priors at the demapper.
inline ReceiverResult iterate_receiver(std::span<const ComplexVector> ys, const ChannelEstimate& est,
                                       DecodingMetricKind kind, const SystemConfig& cfg, int n_iters,
                                       const Interleaver& interleaver, const CompoundConstellation& cc) {
  if (n_iters < 1) throw ConfigError("n_iters: must be >= 1");
  const auto per = static_cast<std::size_t>(cc.bits());
  const std::size_t n_coded = ys.size() * per;
  if (interleaver.size() != n_coded) throw ConfigError("receiver: interleaver length != frame bit count");

  // Candidate likelihoods do not change across iterations.
  const CandidateTable table(cc, kind, est, cfg);
  std::vector<std::vector<double>> likelihoods;
  likelihoods.reserve(ys.size());
  for (const auto& y : ys) likelihoods.push_back(relative_likelihoods(table.costs(y)));

  ReceiverResult r;
  BitBeliefs demap_prior = BitBeliefs::uniform(n_coded);
  for (int it = 0; it < n_iters; ++it) {
    r.demapper_extrinsic.p_one.assign(n_coded, 0.5);
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const auto ext = demap_from_likelihoods(likelihoods[k], std::span(demap_prior.p_one).subspan(k * per, per), cc.bits());
      std::copy(ext.begin(), ext.end(), r.demapper_extrinsic.p_one.begin() + static_cast<std::ptrdiff_t>(k * per));
    }
    const BitBeliefs decoder_prior{interleaver.deinterleave(r.demapper_extrinsic.p_one)};
    auto dec = siso_decode(decoder_prior);
    r.decoder_extrinsic = std::move(dec.coded_extrinsic);
    r.info_posterior = std::move(dec.info_posterior);
    demap_prior.p_one = interleaver.interleave(r.decoder_extrinsic.p_one);
  }
  r.decisions.resize(r.info_posterior.size());
  for (std::size_t i = 0; i < r.decisions.size(); ++i) r.decisions[i] = r.info_posterior.p_one[i] > 0.5 ? 1 : 0;
  return r;
}

}  // namespace cee::bicm
