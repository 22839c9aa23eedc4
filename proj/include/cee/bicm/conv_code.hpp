#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cee::bicm {

using Bits = std::vector<std::uint8_t>;

/// Rate-1/2 feed-forward convolutional code with constraint length 3.
///
/// The register is (u_t, u_{t-1}, u_{t-2}) with u_t in the most significant tap
/// position. Output bit 0 uses the first generator, output bit 1 the second.
/// The default generators are octal 7 (111) then 5 (101), so the impulse
/// response reads 11 10 11. Frames are terminated by two zero tail bits.
class ConvCode {
 public:
  static constexpr int memory = 2;
  static constexpr int n_states = 1 << memory;
  static constexpr int n_outputs = 2;

  constexpr ConvCode(unsigned g_first = 07, unsigned g_second = 05) : gen_{g_first, g_second} {
    for (int s = 0; s < n_states; ++s)
      for (int u = 0; u < 2; ++u) {
        const unsigned reg = (static_cast<unsigned>(u) << memory) | static_cast<unsigned>(s);
        next_[s][u] = static_cast<std::uint8_t>(reg >> 1);
        for (int o = 0; o < n_outputs; ++o)
          out_[s][u][o] = static_cast<std::uint8_t>(std::popcount(reg & gen_[o]) & 1);
      }
  }

  constexpr int next_state(int state, int input) const { return next_[state][input]; }
  constexpr int output(int state, int input, int which) const { return out_[state][input][which]; }

  /// Coded length for k info bits: 2 (k + memory).
  static constexpr std::size_t coded_length(std::size_t k) { return n_outputs * (k + memory); }
  /// Info length that fills exactly n_coded coded bits.
  static std::size_t info_length(std::size_t n_coded) {
    if (n_coded % n_outputs != 0 || n_coded / n_outputs <= memory)
      throw std::invalid_argument("ConvCode: coded length cannot hold a terminated frame");
    return n_coded / n_outputs - memory;
  }

  Bits encode(std::span<const std::uint8_t> info) const {
    Bits coded;
    coded.reserve(coded_length(info.size()));
    int state = 0;
    auto step = [&](int u) {
      for (int o = 0; o < n_outputs; ++o) coded.push_back(out_[state][u][o]);
      state = next_[state][u];
    };
    for (auto b : info) step(b & 1);
    for (int i = 0; i < memory; ++i) step(0);
    return coded;
  }

 private:
  std::array<unsigned, n_outputs> gen_;
  std::array<std::array<std::uint8_t, 2>, n_states> next_{};
  std::array<std::array<std::array<std::uint8_t, n_outputs>, 2>, n_states> out_{};
};

/// The (5,7) code used throughout, with the 7 tap driving the first output bit.
inline constexpr ConvCode kCode57{};

inline Bits conv_encode(std::span<const std::uint8_t> info) { return kCode57.encode(info); }

}  // namespace cee::bicm
