#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "fracpx/check.hpp"
#include "fracpx/error.hpp"
#include "fracpx/lebesgue.hpp"
#include "fracpx/poisson.hpp"

namespace fracpx {

/// Right-hand side f(x, t) with the data of its growth bound
/// |f(x, t)| <= a(x) + C |t|^{p(x,x) - 1}.
struct Nonlinearity {
  std::function<double(double, double)> f;
  /// a(x) >= 0 sampled at the cell centers.
  Grid a;
  double C_growth = 0.0;
  /// t-antiderivative F(x, t) with F(x, 0) = 0, when f has one in closed form.
  std::function<double(double, double)> potential;
};

/// Growth screen on the lattice (interior cell centers) x (t in {0, +-10^k,
/// k = -4, -3.75, ..., 4}).
inline CheckResult growth_screen(const Nonlinearity& f, const Mesh& mesh, const ExponentField& p) {
  std::vector<double> ts{0.0};
  for (int k = -16; k <= 16; ++k) {
    const double t = std::pow(10.0, 0.25 * k);
    ts.push_back(t);
    ts.push_back(-t);
  }
  CheckResult r;
  r.name = "growth_screen";
  r.slack = std::numeric_limits<double>::infinity();
  r.passed = true;
  for (int i : mesh.interior_indices()) {
    const double x = mesh.center(i);
    if (!(f.a[i] >= 0.0)) {
      r.passed = false;
      std::ostringstream os;
      os << "a(x) negative at x = " << x;
      r.detail = os.str();
    }
    const double pbar = p.trace(x);
    for (double t : ts) {
      const double v = std::abs(f.f(x, t));
      const double bound = f.a[i] + f.C_growth * std::pow(std::abs(t), pbar - 1.0);
      const double margin = bound * (1.0 + 1e-12) + 1e-300 - v;
      if (!std::isfinite(v) || margin < 0.0) {
        if (r.passed) {
          std::ostringstream os;
          os << "growth bound violated at x = " << x << ", t = " << t << ": |f| = " << v << " > " << bound;
          r.detail = os.str();
        }
        r.passed = false;
      }
      if (std::isfinite(margin)) r.slack = std::min(r.slack, margin);
    }
  }
  if (!std::isfinite(r.slack)) r.slack = 0.0;
  return r;
}

/// (N_f u)_i = f(x_i, u_i) on the region, zero elsewhere.
inline Grid nemytsky(const Nonlinearity& f, const Mesh& mesh, std::span<const double> u, const CellMask& region) {
  Grid out(mesh.size(), 0.0);
  for (int i = 0; i < mesh.size(); ++i) {
    if (!region[i]) continue;
    out[i] = f.f(mesh.center(i), u[i]);
    if (!std::isfinite(out[i])) {
      std::ostringstream os;
      os << "nonlinearity is not finite at cell " << i << " (x = " << mesh.center(i) << ", u = " << u[i] << ")";
      throw Error(Errc::non_finite, os.str());
    }
  }
  return out;
}

/// 2 max{|Omega|^{1/gamma+}, |Omega|^{1/gamma-}} with gamma = p r / (r - p),
/// p = p(x,x).
inline double c_omega_gamma(const Mesh& mesh, const ExponentField& p, const ScalarExponent& r) {
  const ScalarExponent gamma(
      [p, r](double x) {
        const double pb = p.trace(x);
        return pb * r(x) / (r(x) - pb);
      },
      std::span<const double>{});
  const auto range = exponent_range(mesh, gamma, mesh.interior_mask());
  const double m = mesh.omega_measure();
  return 2.0 * std::max(std::pow(m, 1.0 / range.upper), std::pow(m, 1.0 / range.lower));
}

struct NemytskyTerms {
  double lhs = 0.0;   // ||N_f u||_{r'}
  double base = 0.0;  // ||a||_{p'} + (C||u||_r)^{p+-1} + (C||u||_r)^{p--1}
};

inline NemytskyTerms nemytsky_bound_terms(const Nonlinearity& f, const Mesh& mesh, const ExponentField& p,
                                          const ScalarExponent& r, std::span<const double> u) {
  const auto& omega = mesh.interior_mask();
  const auto rc = conjugate_exponent(r, mesh);
  const auto pbar = trace_exponent(p);
  const auto pc = conjugate_exponent(pbar, mesh);
  const Grid nu = nemytsky(f, mesh, u, omega);
  const double cg = c_omega_gamma(mesh, p, r);
  const double ur = cg * luxemburg_norm(mesh, u, r, omega);
  NemytskyTerms t;
  t.lhs = luxemburg_norm(mesh, nu, rc, omega);
  t.base = luxemburg_norm(mesh, f.a, pc, omega) + std::pow(ur, p.p_plus() - 1.0) + std::pow(ur, p.p_minus() - 1.0);
  return t;
}

/// Smallest C with lhs <= C * base over a calibration family.
inline double calibrate_nemytsky_constant(const Nonlinearity& f, const Mesh& mesh, const ExponentField& p,
                                          const ScalarExponent& r, std::span<const Grid> family) {
  double c = 0.0;
  for (const auto& u : family) {
    const auto t = nemytsky_bound_terms(f, mesh, p, r, u);
    if (t.base > 0.0) {
      c = std::max(c, t.lhs / t.base);
    } else if (t.lhs > 0.0) {
      c = std::numeric_limits<double>::infinity();
    }
  }
  return c;
}

/// ||N_f u||_{r'} <= C (...) with a frozen C and the stated relative slack.
inline CheckResult nemytsky_bound_check(const Nonlinearity& f, const Mesh& mesh, const ExponentField& p,
                                        const ScalarExponent& r, std::span<const double> u, double C,
                                        double slack = 0.1) {
  const auto t = nemytsky_bound_terms(f, mesh, p, r, u);
  CheckResult res;
  res.name = "nemytsky_bound";
  res.value = t.lhs;
  res.bound = (1.0 + slack) * C * t.base;
  res.slack = res.bound - t.lhs;
  res.passed = t.lhs <= res.bound + 1e-14;
  return res;
}

struct FixedPointOptions {
  double theta = 0.5;
  int max_iterations = 200;
  /// Stop when ||h_{k+1} - h_k||_{r'} falls below this.
  double tolerance = 1e-8;
  /// Gradient tolerance for the inner Poisson solves.
  double inner_residual = 1e-10;
  /// Halve theta after two consecutive increment increases.
  bool adaptive_damping = true;
  std::optional<Grid> initial_source;
  std::optional<Grid> initial_u;
};

struct FixedPointIterate {
  double source_norm;  // ||h_k||_{r'}
  double increment;    // ||h_{k+1} - h_k||_{r'}
  double residual;     // semilinear weak residual of T(h_k)
  double theta;
};

struct FixedPointTrace {
  std::vector<FixedPointIterate> iterates;
  double theta = 0.5;
  bool converged = false;
  /// ||J(h*) - h*||_{r'}
  double certificate = 0.0;
  double semilinear_residual = 0.0;
  Grid source;  // h*
};

struct FixedPointResult {
  PoissonSolution solution;
  FixedPointTrace trace;
};

/// sup over active k of |<L(u), e_k> - <N_f u, e_k>|.
inline double semilinear_residual(const Nonlinearity& f, const PoissonProblem& prob, std::span<const double> u) {
  const Grid load = nemytsky(f, prob.mesh(), u, prob.active);
  return weak_residual(prob, u, load);
}

/// Damped Picard iteration h <- (1 - theta) h + theta N_f(T(h)) for the map
/// J = N_f o T. The damping is halved when the increment grows twice in a row.
inline FixedPointResult fixed_point_solve(const Nonlinearity& f, const PoissonProblem& tmpl,
                                          const FixedPointOptions& opt = {}) {
  const auto& mesh = tmpl.mesh();
  const auto screen = growth_screen(f, mesh, tmpl.exponent());
  if (!screen.passed) throw Error(Errc::growth_violation, screen.detail);

  PoissonProblem prob = tmpl;
  prob.tol.el_residual = std::min(prob.tol.el_residual, opt.inner_residual);
  const auto rc = conjugate_exponent(prob.r, mesh);
  const CellMask& act = prob.active;

  Grid u = enforce_fixed(prob, opt.initial_u ? *opt.initial_u : default_initial_guess(prob));
  Grid h = opt.initial_source ? *opt.initial_source : nemytsky(f, mesh, u, act);

  FixedPointResult out;
  auto& tr = out.trace;
  tr.theta = opt.theta;
  double prev_inc = std::numeric_limits<double>::infinity();
  int rising = 0;
  bool diverged = false;
  for (int k = 0; k < opt.max_iterations; ++k) {
    prob.source = h;
    const auto sol = solve_poisson(prob, u);
    u = sol.u;
    if (!std::isfinite(sup_norm(u, act))) {
      diverged = true;
      break;
    }
    Grid j;
    try {
      j = nemytsky(f, mesh, u, act);
    } catch (const Error&) {
      diverged = true;
      break;
    }
    Grid next(h.size(), 0.0);
    Grid diff(h.size(), 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (!act[i]) continue;
      next[i] = (1.0 - tr.theta) * h[i] + tr.theta * j[i];
      diff[i] = next[i] - h[i];
    }
    const double inc = luxemburg_norm(mesh, diff, rc, act);
    if (!std::isfinite(inc)) {
      diverged = true;
      break;
    }
    tr.iterates.push_back({luxemburg_norm(mesh, h, rc, act), inc, weak_residual(prob, u, j), tr.theta});
    h = std::move(next);
    if (inc <= opt.tolerance) {
      tr.converged = true;
      break;
    }
    rising = inc > prev_inc ? rising + 1 : 0;
    prev_inc = inc;
    if (opt.adaptive_damping && rising >= 2) {
      tr.theta *= 0.5;
      rising = 0;
    }
  }

  if (diverged) {
    tr.converged = false;
    tr.certificate = std::numeric_limits<double>::infinity();
    tr.semilinear_residual = std::numeric_limits<double>::infinity();
    out.solution.u = std::move(u);
    out.solution.converged = false;
    out.solution.energy = std::numeric_limits<double>::quiet_NaN();
    tr.source = std::move(h);
    return out;
  }

  prob.source = h;
  out.solution = solve_poisson(prob, u);
  const Grid j = nemytsky(f, mesh, out.solution.u, act);
  Grid diff(h.size(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (act[i]) diff[i] = j[i] - h[i];
  }
  tr.certificate = luxemburg_norm(mesh, diff, rc, act);
  tr.semilinear_residual = weak_residual(prob, out.solution.u, j);
  tr.source = std::move(h);
  return out;
}

struct InvariantBallInputs {
  double C = 0.0;        // Nemytsky-bound constant
  double K1 = 0.0;       // a priori estimate constants
  double K2 = 0.0;
  double a_norm = 0.0;   // ||a||
  double C_omega = 0.0;  // 2 max{|Omega|^{1/gamma+}, |Omega|^{1/gamma-}}
  double p_minus = 2.0;
  double p_plus = 2.0;
};

struct InvariantBall {
  double radius = std::numeric_limits<double>::infinity();
  double denominator = 0.0;
  bool feasible = false;
};

/// Radius of the ball mapped into itself by J, when |Omega| is small enough
/// for the denominator to stay positive.
inline InvariantBall invariant_ball_radius(const InvariantBallInputs& in) {
  const double cp = std::pow(in.C_omega, in.p_plus - 1.0);
  const double cm = std::pow(in.C_omega, in.p_minus - 1.0);
  InvariantBall b;
  b.denominator = 1.0 - in.K2 * (cp + cm);
  if (!(b.denominator > 0.0)) return b;
  b.feasible = true;
  const double num = in.C * (in.a_norm + in.K1 * cp + in.K1 * cm);
  b.radius = std::pow(num / b.denominator, (in.p_minus - 1.0) / (in.p_plus - 1.0));
  return b;
}

/// Omega's interior cells, in index order, split into M consecutive groups of
/// (nearly) equal measure.
inline std::vector<CellMask> shell_partition(const Mesh& mesh, int shells) {
  const auto& idx = mesh.interior_indices();
  const int m = static_cast<int>(idx.size());
  if (shells < 1 || shells > m) {
    std::ostringstream os;
    os << "decompose.shells must lie in [1, " << m << "], got " << shells;
    throw Error(Errc::invalid_argument, os.str());
  }
  std::vector<CellMask> parts(shells, CellMask(mesh.size(), 0));
  for (int k = 0; k < m; ++k) parts[std::size_t(k) * shells / m][idx[k]] = 1;
  return parts;
}

struct DecompositionOptions {
  int shells = 3;
  int max_sweeps = 200;
  /// Sweeps stop once the global semilinear residual falls below this.
  double sweep_tolerance = 1e-8;
  /// Acceptance level for the final global residual.
  double residual_gate = 1e-5;
  FixedPointOptions fixed_point;
};

struct ShellTrace {
  int sweep;
  int shell;
  double measure;
  FixedPointTrace trace;
};

struct DecompositionResult {
  PoissonSolution solution;
  std::vector<ShellTrace> shells;
  std::vector<double> sweep_residuals;
  double global_residual = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Sequential solves on the slices V_0, ..., V_{M-1}: each slice is solved
/// with the current global iterate as its exterior datum (g on the first
/// pass). Because the operator is nonlocal, later slices change the data
/// seen by earlier ones, so the pass is repeated until the global residual
/// settles.
inline DecompositionResult solve_by_decomposition(const Nonlinearity& f, const PoissonProblem& tmpl,
                                                  const DecompositionOptions& opt = {}) {
  const auto& mesh = tmpl.mesh();
  const auto parts = shell_partition(mesh, opt.shells);
  DecompositionResult out;
  Grid w = tmpl.fixed;
  std::vector<std::optional<Grid>> warm(parts.size());
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < parts.size(); ++j) {
      PoissonProblem sub = tmpl;
      sub.active = parts[j];
      sub.fixed = w;
      FixedPointOptions fo = opt.fixed_point;
      fo.initial_source = warm[j];
      fo.initial_u = w;
      auto res = fixed_point_solve(f, sub, fo);
      if (!res.trace.converged) {
        std::ostringstream os;
        os << "fixed-point iteration did not converge on shell " << j << " (sweep " << sweep << ")";
        throw Error(Errc::not_converged, os.str());
      }
      w = res.solution.u;
      warm[j] = res.trace.source;
      out.shells.push_back({sweep, static_cast<int>(j), mesh.measure(parts[j]), std::move(res.trace)});
    }
    out.sweeps = sweep + 1;
    out.global_residual = semilinear_residual(f, tmpl, w);
    out.sweep_residuals.push_back(out.global_residual);
    if (out.global_residual <= opt.sweep_tolerance) break;
  }
  out.converged = out.global_residual <= opt.residual_gate;
  out.solution.u = w;
  out.solution.energy = energy(with_source(tmpl, nemytsky(f, mesh, w, tmpl.active)), w);
  out.solution.el_residual = out.global_residual;
  out.solution.converged = out.converged;
  return out;
}

}  // namespace fracpx
