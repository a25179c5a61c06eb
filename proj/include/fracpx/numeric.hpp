#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace fracpx {

/// Cellwise-constant values aligned with the mesh cells.
using Grid = std::vector<double>;
/// One byte per cell; nonzero marks membership.
using CellMask = std::vector<std::uint8_t>;

/// Tree summation with a fixed split, so results do not depend on how the
/// caller produced the buffer.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const auto half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// t -> |t|^{p-2} t, continuously extended by 0 at t = 0.
inline double signed_power(double t, double p) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), p - 1.0), t);
}

/// |a + delta|^p - |a|^p without the cancellation of the naive difference
/// when |delta| << |a|.
inline double power_increment(double a, double delta, double p) {
  if (delta == 0.0) return 0.0;
  if (a == 0.0) return std::pow(std::abs(delta), p);
  const double ratio = delta / a;
  if (ratio > -0.5) {
    return std::pow(std::abs(a), p) * std::expm1(p * std::log1p(ratio));
  }
  return std::pow(std::abs(a + delta), p) - std::pow(std::abs(a), p);
}

inline std::size_t count(const CellMask& mask) {
  std::size_t c = 0;
  for (auto m : mask) c += (m != 0);
  return c;
}

}  // namespace fracpx
