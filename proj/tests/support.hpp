#pragma once

#include <cmath>
#include <memory>
#include <numbers>

#include "fracpx/poisson.hpp"
#include "fracpx/semilinear.hpp"

namespace fracpx::testing {

struct ProblemSpec {
  double R = 2.0;
  int n = 64;
  double s = 0.3;
  ExponentField::Evaluator p = [](double, double) { return 2.0; };
  /// Constant r; 0 picks the midpoint between p(x,x)+ and min p*_s.
  double r = 0.0;
  std::function<double(double)> h = [](double) { return 1.0; };
  std::function<double(double)> g = [](double) { return 0.0; };
  bool tails = true;
  PoissonTolerances tol{};
};

inline PoissonProblem make_problem(const ProblemSpec& ps) {
  const auto mesh = build_mesh(ps.R, ps.n, {{-1.0, 1.0}});
  const ExponentField p(ps.p, ps.s, mesh);
  auto disc = make_discretization(mesh, p, {ps.tails});
  double r = ps.r;
  if (r == 0.0) {
    double pb = 0.0, crit = 1e300;
    for (int i : mesh.interior_indices()) {
      pb = std::max(pb, p.trace(mesh.center(i)));
      crit = std::min(crit, critical_exponent(p, mesh.center(i)));
    }
    r = 0.5 * (pb + crit);
  }
  Grid h(mesh.size(), 0.0), g(mesh.size(), 0.0);
  for (int i = 0; i < mesh.size(); ++i) {
    if (mesh.interior(i)) {
      h[i] = ps.h(mesh.center(i));
    } else {
      g[i] = ps.g(mesh.center(i));
    }
  }
  return make_poisson_problem(disc, ScalarExponent([r](double) { return r; }, mesh.centers()), h, g, ps.tol);
}

/// Solution of 2 PV int (u(x) - u(y)) |x - y|^{-1-2s} dy = 1 on (-1, 1),
/// u = 0 outside: the fractional Laplacian with its constant C_{1,s} has
/// right-hand side C_{1,s} / 2, and (-Delta)^s u = 1 is solved by
/// c_s (1 - x^2)^s.
inline double linear_oracle(double x, double s) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double c_s = std::tgamma(0.5) / (std::pow(4.0, s) * std::tgamma(0.5 + s) * std::tgamma(1.0 + s));
  const double C = s * std::pow(2.0, 2.0 * s) * std::tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - s));
  return 0.5 * C * c_s * std::pow(1.0 - x * x, s);
}

/// Relative L2 error over Omega against the linear oracle.
inline double linear_oracle_error(const PoissonProblem& prob, const Grid& u) {
  const auto& m = prob.mesh();
  const double s = prob.exponent().order();
  double num = 0.0, den = 0.0;
  for (int i : m.interior_indices()) {
    const double e = linear_oracle(m.center(i), s);
    num += (u[i] - e) * (u[i] - e);
    den += e * e;
  }
  return std::sqrt(num / den);
}

}  // namespace fracpx::testing
