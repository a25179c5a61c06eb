#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fracpx/mesh.hpp"
#include "fracpx/numeric.hpp"

namespace fracpx {

/// Independent uniform(-1, 1) cell values times a log-uniform amplitude in
/// [1e-2, 1e2]; zero off the region.
inline Grid random_cell_function(const Mesh& mesh, const CellMask& region, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> logamp(-2.0, 2.0);
  const double amp = std::pow(10.0, logamp(rng));
  Grid u(mesh.size(), 0.0);
  for (int i = 0; i < mesh.size(); ++i) {
    const double v = unit(rng);
    if (region[i]) u[i] = amp * v;
  }
  return u;
}

/// Sine series on each interval of Omega, zero outside. Defined on the
/// continuum so one draw can be sampled on several meshes.
struct SineSeries {
  std::vector<Interval> omega;
  std::vector<std::vector<double>> coef;  // per interval, per mode

  double operator()(double x) const {
    for (std::size_t k = 0; k < omega.size(); ++k) {
      const auto& iv = omega[k];
      if (!iv.contains(x)) continue;
      const double t = (x - iv.lo) / (iv.hi - iv.lo);
      double v = 0.0;
      for (std::size_t m = 0; m < coef[k].size(); ++m) v += coef[k][m] * std::sin((m + 1) * std::numbers::pi * t);
      return v;
    }
    return 0.0;
  }

  Grid sample(const Mesh& mesh) const {
    Grid u(mesh.size());
    for (int i = 0; i < mesh.size(); ++i) u[i] = (*this)(mesh.center(i));
    return u;
  }
};

/// Mode m gets a coefficient uniform in (-1, 1) / m.
inline SineSeries random_sine_series(const std::vector<Interval>& omega, std::mt19937_64& rng, int modes = 6) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SineSeries f{omega, {}};
  for (std::size_t k = 0; k < omega.size(); ++k) {
    std::vector<double> c(modes);
    for (int m = 0; m < modes; ++m) c[m] = unit(rng) / (m + 1);
    f.coef.push_back(std::move(c));
  }
  return f;
}

}  // namespace fracpx
