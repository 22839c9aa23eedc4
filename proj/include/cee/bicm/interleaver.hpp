#pragma once

#include "cee/numerics.hpp"

#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace cee::bicm {

/// Uniform random permutation drawn from a seed. interleave(x)[i] = x[perm[i]].
class Interleaver {
 public:
  Interleaver(std::size_t length, std::uint64_t permutation_seed) : seed_(permutation_seed), perm_(length) {
    std::iota(perm_.begin(), perm_.end(), std::uint32_t{0});
    RngStream rng(permutation_seed, 0x1eaf);
    for (std::size_t i = length; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(perm_[i - 1], perm_[pick(rng.engine())]);
    }
  }

  std::size_t size() const { return perm_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint32_t>& permutation() const { return perm_; }

  template <typename T>
  std::vector<T> interleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[i] = in[perm_[i]];
    return out;
  }

  template <typename T>
  std::vector<T> deinterleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[i];
    return out;
  }

  template <typename T>
  std::vector<T> interleave(const std::vector<T>& in) const { return interleave(std::span<const T>(in)); }
  template <typename T>
  std::vector<T> deinterleave(const std::vector<T>& in) const { return deinterleave(std::span<const T>(in)); }

 private:
  void check(std::size_t n) const {
    if (n != perm_.size()) throw ConfigError("interleaver: length mismatch");
  }

  std::uint64_t seed_;
  std::vector<std::uint32_t> perm_;
};

}  // namespace cee::bicm
