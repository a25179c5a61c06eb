#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "fracpx/check.hpp"
#include "fracpx/error.hpp"
#include "fracpx/exponents.hpp"
#include "fracpx/kernel.hpp"
#include "fracpx/lebesgue.hpp"
#include "fracpx/numeric.hpp"
#include "fracpx/sobolev.hpp"

namespace fracpx {

struct PoissonTolerances {
  /// Sup-norm of the energy gradient over the unknowns.
  double el_residual = 1e-8;
  int max_iterations = 50000;
  int memory = 8;
};

/// Discrete Dirichlet problem: minimize the energy over `active` cells with
/// every other cell held at `fixed`.
struct PoissonProblem {
  std::shared_ptr<const Discretization> disc;
  ScalarExponent r;
  /// Right-hand side h; read on active cells only.
  Grid source;
  /// Values held fixed off the active set (the exterior datum g on the
  /// exterior cells).
  Grid fixed;
  CellMask active;
  PoissonTolerances tol;

  const Mesh& mesh() const { return disc->mesh; }
  const KernelWeights& weights() const { return disc->weights; }
  const ExponentField& exponent() const { return disc->p; }
};

inline PoissonProblem make_poisson_problem(std::shared_ptr<const Discretization> disc, ScalarExponent r, Grid source,
                                           Grid fixed, PoissonTolerances tol = {}) {
  const auto& mesh = disc->mesh;
  const auto n = static_cast<std::size_t>(mesh.size());
  if (source.size() != n || fixed.size() != n) {
    throw Error(Errc::invalid_argument, "source and boundary grids must have one value per cell");
  }
  for (int i = 0; i < mesh.size(); ++i) {
    if ((mesh.interior(i) && !std::isfinite(source[i])) || !std::isfinite(fixed[i])) {
      std::ostringstream os;
      os << "problem data not finite at cell " << i;
      throw Error(Errc::non_finite, os.str());
    }
  }
  if (!validate_growth_pair(r, disc->p, mesh)) {
    throw Error(Errc::invalid_argument, "exponent r violates p(x,x) <= sup p(.,.) < inf r <= r(x) < p*_s(x) on Omega");
  }
  CellMask active = mesh.interior_mask();
  return PoissonProblem{std::move(disc), std::move(r), std::move(source), std::move(fixed), std::move(active), tol};
}

/// Same problem with a different right-hand side.
inline PoissonProblem with_source(const PoissonProblem& prob, Grid source) {
  PoissonProblem out = prob;
  out.source = std::move(source);
  return out;
}

struct PoissonSolution {
  Grid u;
  double energy = 0.0;
  double el_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Energy after each accepted step (starting value first).
  std::vector<double> energy_trace;
};

/// Projects u onto the affine class: fixed values off the active set.
inline Grid enforce_fixed(const PoissonProblem& prob, Grid u) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!prob.active[i]) u[i] = prob.fixed[i];
  }
  return u;
}

inline double energy(const PoissonProblem& prob, std::span<const double> u) {
  const auto& W = prob.weights();
  const int n = W.size();
  const double h = W.cell_width();
  std::vector<double> buf;
  buf.reserve(std::size_t(n) * (n - 1) / 2 + 2 * n);
  for (int i = 0; i < n; ++i) {
    const double* w = W.weight_row(i);
    const double* p = W.exponent_row(i);
    for (int j = i + 1; j < n; ++j) {
      const double d = u[i] - u[j];
      if (d != 0.0) buf.push_back(2.0 * w[j] * std::pow(std::abs(d), p[j]) / p[j]);
    }
  }
  for (int i = 0; i < n; ++i) {
    const double pd = W.diagonal_exponent(i);
    if (u[i] != 0.0) buf.push_back(W.tail_coefficient(i) * std::pow(std::abs(u[i]), pd) / pd);
    if (prob.active[i]) buf.push_back(-prob.source[i] * u[i] * h);
  }
  return pairwise_sum(buf);
}

/// Gradient with respect to the active values; zero on fixed cells.
inline Grid energy_gradient(const PoissonProblem& prob, std::span<const double> u) {
  Grid g = weak_form_coordinates(prob.weights(), u, prob.active);
  const double h = prob.weights().cell_width();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (prob.active[i]) g[i] -= prob.source[i] * h;
  }
  return g;
}

/// energy(u + t d) - energy(u) for d supported on the active set, evaluated
/// term by term so that small steps are resolved below the rounding level of
/// the energy itself.
inline double energy_change(const PoissonProblem& prob, std::span<const double> u, std::span<const double> d,
                            double t) {
  const auto& W = prob.weights();
  const int n = W.size();
  const double h = W.cell_width();
  std::vector<double> buf;
  for (int i = 0; i < n; ++i) {
    const double* w = W.weight_row(i);
    const double* p = W.exponent_row(i);
    for (int j = i + 1; j < n; ++j) {
      const double dd = d[i] - d[j];
      if (dd == 0.0) continue;
      buf.push_back(2.0 * w[j] / p[j] * power_increment(u[i] - u[j], t * dd, p[j]));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (d[i] == 0.0) continue;
    const double pd = W.diagonal_exponent(i);
    buf.push_back(W.tail_coefficient(i) / pd * power_increment(u[i], t * d[i], pd));
    buf.push_back(-prob.source[i] * t * d[i] * h);
  }
  return pairwise_sum(buf);
}

inline double sup_norm(std::span<const double> v, const CellMask& mask) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) m = std::max(m, std::abs(v[i]));
  }
  return m;
}

/// Default starting point: active cells set to the mean of the fixed values.
inline Grid default_initial_guess(const PoissonProblem& prob) {
  double sum = 0.0;
  int cnt = 0;
  for (std::size_t i = 0; i < prob.fixed.size(); ++i) {
    if (!prob.active[i]) {
      sum += prob.fixed[i];
      ++cnt;
    }
  }
  const double mean = cnt ? sum / cnt : 0.0;
  Grid u = prob.fixed;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (prob.active[i]) u[i] = mean;
  }
  return u;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b, const CellMask& mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask[i]) s += a[i] * b[i];
  }
  return s;
}

}  // namespace detail

/// Minimizes the strictly convex energy over the active cells.
///
/// Limited-memory quasi-Newton directions with a Jacobi scaling by the
/// linear-case diagonal 2 sum_j w_ij + tail, globalized by Armijo
/// backtracking (parameter 1e-4, halving). Falls back to the scaled
/// steepest-descent direction whenever the quasi-Newton direction is not a
/// descent direction or its line search fails. Gives up (converged = false)
/// when the residual stops improving for 500 accepted steps.
inline PoissonSolution solve_poisson(const PoissonProblem& prob, std::optional<Grid> initial = std::nullopt) {
  const auto& W = prob.weights();
  const int n = W.size();
  const CellMask& act = prob.active;

  Grid diag(n, 1.0);
  for (int i = 0; i < n; ++i) {
    if (!act[i]) continue;
    double s = 0.0;
    const double* w = W.weight_row(i);
    for (int j = 0; j < n; ++j) s += w[j];
    diag[i] = 2.0 * s + W.tail_coefficient(i);
  }

  PoissonSolution sol;
  sol.u = enforce_fixed(prob, initial ? std::move(*initial) : default_initial_guess(prob));
  double e = energy(prob, sol.u);
  if (!std::isfinite(e)) throw Error(Errc::non_finite, "initial energy is not finite");
  sol.energy_trace.push_back(e);
  Grid g = energy_gradient(prob, sol.u);
  double res = sup_norm(g, act);

  struct Pair {
    Grid s, y;
    double rho;
  };
  std::deque<Pair> memory;
  Grid d(n, 0.0), trial(n);

  constexpr int stall_limit = 500;
  double best = res;
  int stalled = 0;
  int it = 0;
  while (res > prob.tol.el_residual && it < prob.tol.max_iterations && stalled < stall_limit) {
    // Two-loop recursion with H0 = gamma * diag^{-1}.
    Grid q = g;
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      alpha[k] = memory[k].rho * detail::dot(memory[k].s, q, act);
      for (int i = 0; i < n; ++i) q[i] -= alpha[k] * memory[k].y[i];
    }
    double gamma = 1.0;
    if (!memory.empty()) {
      const auto& last = memory.back();
      double yy = 0.0;
      for (int i = 0; i < n; ++i) {
        if (act[i]) yy += last.y[i] * last.y[i] / diag[i];
      }
      gamma = 1.0 / (last.rho * yy);
    }
    for (int i = 0; i < n; ++i) q[i] = act[i] ? gamma * q[i] / diag[i] : 0.0;
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double beta = memory[k].rho * detail::dot(memory[k].y, q, act);
      for (int i = 0; i < n; ++i) q[i] += memory[k].s[i] * (alpha[k] - beta);
    }
    for (int i = 0; i < n; ++i) d[i] = act[i] ? -q[i] : 0.0;

    double slope = detail::dot(g, d, act);
    if (!(slope < 0.0)) {
      memory.clear();
      for (int i = 0; i < n; ++i) d[i] = act[i] ? -g[i] / diag[i] : 0.0;
      slope = detail::dot(g, d, act);
    }

    double t = 1.0;
    double de = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      de = energy_change(prob, sol.u, d, t);
      if (!std::isfinite(de)) throw Error(Errc::non_finite, "energy is not finite along the search direction");
      if (de <= 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      break;  // rounding floor reached before the residual target
    }

    for (int i = 0; i < n; ++i) trial[i] = act[i] ? sol.u[i] + t * d[i] : sol.u[i];
    Grid g_new = energy_gradient(prob, trial);
    Pair pr{Grid(n, 0.0), Grid(n, 0.0), 0.0};
    for (int i = 0; i < n; ++i) {
      if (!act[i]) continue;
      pr.s[i] = trial[i] - sol.u[i];
      pr.y[i] = g_new[i] - g[i];
    }
    const double sy = detail::dot(pr.s, pr.y, act);
    if (sy > 1e-300) {
      pr.rho = 1.0 / sy;
      memory.push_back(std::move(pr));
      if (static_cast<int>(memory.size()) > prob.tol.memory) memory.pop_front();
    }
    std::swap(sol.u, trial);
    g = std::move(g_new);
    e += de;
    sol.energy_trace.push_back(e);
    res = sup_norm(g, act);
    ++it;
    if (res < 0.999 * best) {
      best = res;
      stalled = 0;
    } else {
      ++stalled;
    }
  }

  sol.iterations = it;
  sol.el_residual = res;
  sol.converged = res <= prob.tol.el_residual;
  sol.energy = energy(prob, sol.u);
  if (!std::isfinite(sol.energy)) throw Error(Errc::non_finite, "final energy is not finite");
  return sol;
}

/// sup over active k of |<L(u), e_k> - load_k * h|.
inline double weak_residual(const PoissonProblem& prob, std::span<const double> u, std::span<const double> load) {
  const Grid lu = weak_form_coordinates(prob.weights(), u, prob.active);
  const double h = prob.weights().cell_width();
  double m = 0.0;
  for (std::size_t i = 0; i < lu.size(); ++i) {
    if (prob.active[i]) m = std::max(m, std::abs(lu[i] - load[i] * h));
  }
  return m;
}

struct EquivalenceReport {
  CheckResult check;
  /// Most negative energy(u + phi) - energy(u) over the trials.
  double min_energy_change = 0.0;
  double weak_residual = 0.0;
  int trials = 0;
};

/// Minimizer <=> weak solution, both directions: no admissible perturbation
/// lowers the energy by more than 1e-8, and the weak-form residual against
/// every coordinate test function is within tolerance.
inline EquivalenceReport minimizer_equivalence_check(const PoissonSolution& sol, const PoissonProblem& prob,
                                                     int trials, std::mt19937_64& rng) {
  constexpr double energy_tol = 1e-8;
  const int n = prob.mesh().size();
  EquivalenceReport rep;
  rep.trials = trials;
  rep.weak_residual = weak_residual(prob, sol.u, prob.source);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> logscale(-6.0, 0.0);
  Grid phi(n, 0.0);
  for (int k = 0; k < trials; ++k) {
    for (int i = 0; i < n; ++i) phi[i] = prob.active[i] ? unit(rng) : 0.0;
    const double scale = std::pow(10.0, logscale(rng));
    const double de = energy_change(prob, sol.u, phi, scale);
    rep.min_energy_change = std::min(rep.min_energy_change, de);
  }
  rep.check.name = "minimizer_equivalence";
  rep.check.value = rep.weak_residual;
  rep.check.bound = prob.tol.el_residual;
  rep.check.slack = std::min(prob.tol.el_residual - rep.weak_residual, rep.min_energy_change + energy_tol);
  rep.check.passed = rep.min_energy_change >= -energy_tol && rep.weak_residual <= prob.tol.el_residual;
  std::ostringstream os;
  os << "trials=" << trials << " min_energy_change=" << rep.min_energy_change
     << " weak_residual=" << rep.weak_residual;
  rep.check.detail = os.str();
  return rep;
}

struct EstimateReport {
  std::vector<double> a;  // max{||u||_r^{p+-1}, ||u||_r^{p--1}}
  std::vector<double> b;  // ||h||_{r'}^{(p+-1)/(p--1)}
  double K1 = 0.0;
  double K2 = 0.0;
  bool fit_feasible = false;
  bool all_converged = true;
  /// Largest a_k / (K1 + K2 b_k) over the held-out half.
  double worst_holdout_ratio = 0.0;
  bool passed = false;
};

/// Least (K1 + K2 mean b) with K1, K2 >= 0 and a_k <= K1 + K2 b_k for all
/// given points. The feasible set is a polyhedron in the quarter plane, so
/// the optimum sits on a vertex: enumerate lines through pairs of points and
/// the two axis-aligned candidates.
inline std::optional<std::pair<double, double>> fit_affine_upper_bound(std::span<const double> a,
                                                                       std::span<const double> b) {
  const std::size_t m = a.size();
  double mean_b = 0.0;
  for (double v : b) mean_b += v;
  mean_b /= std::max<std::size_t>(m, 1);
  auto feasible = [&](double k1, double k2) {
    for (std::size_t k = 0; k < m; ++k) {
      const double rhs = k1 + k2 * b[k];
      if (a[k] > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
  };
  std::optional<std::pair<double, double>> best;
  double best_obj = std::numeric_limits<double>::infinity();
  auto consider = [&](double k1, double k2) {
    if (!(k1 >= 0.0 && k2 >= 0.0) || !std::isfinite(k1) || !std::isfinite(k2)) return;
    if (!feasible(k1, k2)) return;
    const double obj = k1 + k2 * mean_b;
    if (obj < best_obj) {
      best_obj = obj;
      best = std::make_pair(k1, k2);
    }
  };
  double amax = 0.0;
  for (double v : a) amax = std::max(amax, v);
  consider(amax, 0.0);
  double ratio = 0.0;
  bool ok = true;
  for (std::size_t k = 0; k < m; ++k) {
    if (b[k] > 0.0) {
      ratio = std::max(ratio, a[k] / b[k]);
    } else if (a[k] > 0.0) {
      ok = false;
    }
  }
  if (ok) consider(0.0, ratio);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = k + 1; l < m; ++l) {
      if (b[k] == b[l]) continue;
      const double k2 = (a[l] - a[k]) / (b[l] - b[k]);
      consider(a[k] - k2 * b[k], k2);
    }
  }
  return best;
}

/// Fit/holdout verification of
///   ||u||_r^{p(.,.)-1} <= K1 + K2 ||h||_{r'}^{(p+-1)/(p--1)}
/// over a family of right-hand sides sharing one exterior datum. Even
/// positions train, odd positions are held out; the held-out bound carries a
/// 10% slack.
inline EstimateReport lr_estimate_check(std::span<const Grid> family, const PoissonProblem& tmpl) {
  const auto& mesh = tmpl.mesh();
  const double pm = tmpl.exponent().p_minus();
  const double pp = tmpl.exponent().p_plus();
  const auto rc = conjugate_exponent(tmpl.r, mesh);
  const auto& omega = mesh.interior_mask();
  EstimateReport rep;
  std::vector<double> ta, tb, ha, hb;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto prob = with_source(tmpl, family[k]);
    const auto sol = solve_poisson(prob);
    rep.all_converged = rep.all_converged && sol.converged;
    const double nu = luxemburg_norm(mesh, sol.u, tmpl.r, omega);
    const double nh = luxemburg_norm(mesh, family[k], rc, omega);
    const double ak = std::max(std::pow(nu, pp - 1.0), std::pow(nu, pm - 1.0));
    const double bk = std::pow(nh, (pp - 1.0) / (pm - 1.0));
    rep.a.push_back(ak);
    rep.b.push_back(bk);
    (k % 2 == 0 ? ta : ha).push_back(ak);
    (k % 2 == 0 ? tb : hb).push_back(bk);
  }
  const auto fit = fit_affine_upper_bound(ta, tb);
  if (!fit) return rep;
  rep.fit_feasible = true;
  rep.K1 = fit->first;
  rep.K2 = fit->second;
  bool ok = true;
  for (std::size_t k = 0; k < ha.size(); ++k) {
    const double bound = rep.K1 + rep.K2 * hb[k];
    if (bound > 0.0) {
      rep.worst_holdout_ratio = std::max(rep.worst_holdout_ratio, ha[k] / bound);
    } else if (ha[k] > 0.0) {
      rep.worst_holdout_ratio = std::numeric_limits<double>::infinity();
    }
    if (ha[k] > 1.1 * bound + 1e-14) ok = false;
  }
  rep.passed = ok && rep.all_converged;
  return rep;
}

}  // namespace fracpx
