#pragma once

#include "cee/numerics.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cee::bicm {

/// Scalar constellation; points[label] with label bit j carried by (label >> j) & 1.
struct Constellation {
  int bits_per_point = 0;
  std::vector<Complex> points;

  double mean_energy() const {
    double e = 0.0;
    for (auto p : points) e += std::norm(p);
    return e / static_cast<double>(points.size());
  }
};

/// Gray-labeled square 16-QAM scaled to the given average energy.
/// Bits 0,1 select the in-phase level and bits 2,3 the quadrature level,
/// each pair Gray mapped as 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
inline Constellation qam16_gray(double average_energy) {
  auto gray_level = [](int b_first, int b_second) {
    if (b_first == 0 && b_second == 0) return -3;
    if (b_first == 0 && b_second == 1) return -1;
    if (b_first == 1 && b_second == 1) return 1;
    return 3;
  };
  const double scale = std::sqrt(average_energy / 10.0);
  Constellation c{4, std::vector<Complex>(16)};
  for (int label = 0; label < 16; ++label) {
    const int i_level = gray_level((label >> 0) & 1, (label >> 1) & 1);
    const int q_level = gray_level((label >> 2) & 1, (label >> 3) & 1);
    c.points[label] = scale * Complex(i_level, q_level);
  }
  return c;
}

/// Antipodal constellation: label 0 -> -a, label 1 -> +a.
inline Constellation bpsk(double amplitude = 1.0) { return Constellation{1, {Complex(-amplitude, 0.0), Complex(amplitude, 0.0)}}; }

/// All m_t-antenna combinations of a scalar constellation. Compound label bits
/// [a * b, (a + 1) * b) belong to antenna a, where b is bits per scalar point.
struct CompoundConstellation {
  int m_t = 0;
  int bits_per_antenna = 0;
  std::vector<ComplexVector> points;

  int bits() const { return m_t * bits_per_antenna; }
  std::size_t size() const { return points.size(); }

  static CompoundConstellation build(const Constellation& scalar, int m_t) {
    CompoundConstellation cc{m_t, scalar.bits_per_point, {}};
    const std::size_t per = scalar.points.size();
    const std::size_t total = std::size_t{1} << (m_t * scalar.bits_per_point);
    cc.points.reserve(total);
    for (std::size_t label = 0; label < total; ++label) {
      ComplexVector x(m_t);
      for (int a = 0; a < m_t; ++a) x(a) = scalar.points[(label >> (a * scalar.bits_per_point)) & (per - 1)];
      cc.points.push_back(std::move(x));
    }
    return cc;
  }

  std::size_t label_of(std::span<const std::uint8_t> bits) const {
    std::size_t label = 0;
    for (std::size_t j = 0; j < bits.size(); ++j) label |= static_cast<std::size_t>(bits[j] & 1) << j;
    return label;
  }
};

/// Maps interleaved bits onto compound symbols, bits().size() bits per symbol.
inline std::vector<ComplexVector> map_bits(std::span<const std::uint8_t> bits, const CompoundConstellation& cc) {
  const auto per = static_cast<std::size_t>(cc.bits());
  if (per == 0 || bits.size() % per != 0) throw ConfigError("map_frame: bit count not divisible by m_t * bits per point");
  std::vector<ComplexVector> symbols;
  symbols.reserve(bits.size() / per);
  for (std::size_t k = 0; k < bits.size(); k += per) symbols.push_back(cc.points[cc.label_of(bits.subspan(k, per))]);
  return symbols;
}

}  // namespace cee::bicm
