#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracpx/catalog.hpp"
#include "fracpx/config.hpp"
#include "fracpx/exponents.hpp"
#include "fracpx/kernel.hpp"
#include "fracpx/lebesgue.hpp"
#include "fracpx/mesh.hpp"
#include "fracpx/poisson.hpp"
#include "fracpx/sampling.hpp"
#include "fracpx/semilinear.hpp"
#include "fracpx/sobolev.hpp"

namespace fracpx {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_not_converged = 2, exit_config = 3 };

/// Everything a run needs, built from a RunConfig.
struct Setup {
  std::shared_ptr<const Discretization> disc;
  ScalarExponent r;
  PoissonProblem problem;
  std::optional<Nonlinearity> nonlinearity;
};

inline ScalarExponent default_r_exponent(const Mesh& mesh, const ExponentField& p) {
  double pbar_plus = -std::numeric_limits<double>::infinity();
  double crit_min = std::numeric_limits<double>::infinity();
  for (int i : mesh.interior_indices()) {
    pbar_plus = std::max(pbar_plus, p.trace(mesh.center(i)));
    crit_min = std::min(crit_min, critical_exponent(p, mesh.center(i)));
  }
  const double r = 0.5 * (pbar_plus + crit_min);
  return ScalarExponent([r](double) { return r; }, mesh.centers());
}

inline Grid sample(const std::function<double(double)>& f, const Mesh& mesh) {
  Grid v(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) v[i] = f(mesh.center(i));
  return v;
}

inline Setup build_setup(const RunConfig& c, std::optional<int> n_cells = std::nullopt) {
  const Mesh mesh = build_mesh(c.R, n_cells.value_or(c.n_cells), c.omega);
  const ExponentField p(catalog::make_field(c.exponent), c.s, mesh, c.dimension);
  auto disc = make_discretization(mesh, p, {c.tails});
  ScalarExponent r = c.r_exponent ? ScalarExponent(catalog::make_scalar_exponent(*c.r_exponent), mesh.centers())
                                  : default_r_exponent(mesh, p);
  const auto h = catalog::make_function(c.source);
  const auto g = catalog::make_function(c.boundary);
  Grid source(mesh.size(), 0.0);
  Grid fixed(mesh.size(), 0.0);
  for (int i = 0; i < mesh.size(); ++i) {
    if (mesh.interior(i)) {
      source[i] = h(mesh.center(i));
    } else {
      fixed[i] = g(mesh.center(i));
    }
  }
  PoissonTolerances tol;
  tol.el_residual = c.el_residual;
  tol.max_iterations = c.max_iterations;
  Setup s{disc, r, make_poisson_problem(disc, r, std::move(source), std::move(fixed), tol), std::nullopt};

  if (c.document.contains("nonlinearity")) {
    const auto a = catalog::make_function(c.a);
    auto forms = catalog::make_nonlinearity(c.nonlinearity, a, [p](double x) { return p.trace(x); });
    Nonlinearity f;
    f.f = forms.f;
    f.potential = forms.potential;
    f.a = sample(a, mesh);
    f.C_growth = c.C_growth.value_or(forms.default_growth);
    s.nonlinearity = std::move(f);
  }
  return s;
}

/// Ordered `key: value` lines.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

  void add_check(const CheckResult& c, const std::string& extra = {}) {
    std::string v = std::string(c.passed ? "pass" : "fail") + " slack=" + fmt(c.slack) + " value=" + fmt(c.value) +
                    " bound=" + fmt(c.bound);
    if (!extra.empty()) v += " " + extra;
    if (!c.detail.empty()) v += " " + c.detail;
    add("check." + c.name, v);
  }

  std::string str() const {
    std::string s;
    for (const auto& [k, v] : lines_) s += k + ": " + v + "\n";
    return s;
  }

  static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

inline std::string solution_csv(const Mesh& mesh, std::span<const double> u) {
  std::string s = "x,u,interior\n";
  char buf[96];
  for (int i = 0; i < mesh.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", mesh.center(i), u[i], mesh.interior(i) ? 1 : 0);
    s += buf;
  }
  return s;
}

inline std::string fixed_point_csv(const FixedPointTrace& t) {
  std::string s = "k,increment,residual\n";
  char buf[96];
  for (std::size_t k = 0; k < t.iterates.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, t.iterates[k].increment, t.iterates[k].residual);
    s += buf;
  }
  return s;
}

inline std::string decomposition_csv(const DecompositionResult& d) {
  std::string s = "sweep,shell,measure,k,increment,residual\n";
  char buf[160];
  for (const auto& sh : d.shells) {
    for (std::size_t k = 0; k < sh.trace.iterates.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%zu,%.17g,%.17g\n", sh.sweep, sh.shell, sh.measure, k,
                    sh.trace.iterates[k].increment, sh.trace.iterates[k].residual);
      s += buf;
    }
  }
  return s;
}

namespace detail {

/// Aggregates a randomized property check into one CheckResult.
struct Tally {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double value = 0.0;
  double bound = 0.0;
  std::string first_failure;

  void add(const CheckResult& c) {
    ++trials;
    if (c.slack < worst_slack) {
      worst_slack = c.slack;
      value = c.value;
      bound = c.bound;
    }
    if (!c.passed) {
      if (failures == 0) first_failure = c.detail;
      ++failures;
    }
  }

  CheckResult result() const {
    CheckResult r;
    r.name = name;
    r.passed = failures == 0;
    r.slack = std::isfinite(worst_slack) ? worst_slack : 0.0;
    r.value = value;
    r.bound = bound;
    r.detail = "trials=" + std::to_string(trials) + " failures=" + std::to_string(failures);
    if (failures) r.detail += " first_failure=[" + first_failure + "]";
    return r;
  }
};

}  // namespace detail

/// Maximum of ||u||_{p(x,x),Omega} / [u] over sine series sampled on `mesh`.
inline double poincare_constant(const Mesh& mesh, const ExponentField& p, const KernelWeights& W,
                                const std::vector<SineSeries>& family) {
  double c = 0.0;
  for (const auto& f : family) c = std::max(c, poincare_ratio(mesh, p, W, f.sample(mesh)));
  return c;
}

/// Runs one enabled check and returns its aggregated result.
inline CheckResult run_check(const std::string& name, const RunConfig& c, const Setup& s,
                             const std::optional<PoissonSolution>& solved, std::mt19937_64& rng) {
  const auto& prob = s.problem;
  const auto& mesh = prob.mesh();
  const auto& p = prob.exponent();
  const auto& omega = mesh.interior_mask();
  const auto pbar = trace_exponent(p);
  const int n = c.samples;

  if (name == "norm_modular" || name == "holder" || name == "power_norm") {
    detail::Tally t;
    t.name = name;
    const ScalarExponent beta([r = s.r, pbar](double x) { return r(x) / pbar(x); }, mesh.centers());
    for (int k = 0; k < n; ++k) {
      const Grid u = random_cell_function(mesh, omega, rng);
      if (name == "norm_modular") {
        t.add(norm_modular_relation_check(mesh, u, s.r, omega));
      } else if (name == "holder") {
        const Grid v = random_cell_function(mesh, omega, rng);
        t.add(holder_pairing_check(mesh, u, v, s.r, omega));
      } else {
        t.add(power_norm_bounds_check(mesh, u, pbar, beta, omega));
      }
    }
    return t.result();
  }
  if (name == "norm_of_one") {
    const ScalarExponent gamma(
        [r = s.r, pbar](double x) { return pbar(x) * r(x) / (r(x) - pbar(x)); }, mesh.centers());
    return norm_of_one_bounds(mesh, gamma, omega);
  }
  if (name == "poincare") {
    std::vector<SineSeries> family;
    for (int k = 0; k < n; ++k) family.push_back(random_sine_series(mesh.omega(), rng));
    const double c1 = poincare_constant(mesh, p, prob.weights(), family);
    const auto fine = build_setup(c, 2 * mesh.size());
    const double c2 = poincare_constant(fine.problem.mesh(), fine.problem.exponent(), fine.problem.weights(), family);
    CheckResult r;
    r.name = name;
    r.value = std::abs(c2 - c1) / c1;
    r.bound = 0.2;
    r.slack = r.bound - r.value;
    r.passed = std::isfinite(c1) && c1 > 0.0 && r.value < r.bound;
    r.detail = "constant_n=" + Report::fmt(c1) + " constant_2n=" + Report::fmt(c2) +
               " samples=" + std::to_string(n);
    return r;
  }
  if (name == "estimate") {
    std::vector<Grid> family;
    std::uniform_real_distribution<double> shift(-0.5, 0.5);
    for (int k = 0; k < 16; ++k) {
      const double amp = std::pow(10.0, 1.0 - 2.0 * k / 15.0 + 0.1 * shift(rng));
      const auto shape = random_sine_series(mesh.omega(), rng).sample(mesh);
      Grid h(mesh.size(), 0.0);
      for (int i : mesh.interior_indices()) h[i] = amp * (prob.source[i] + shape[i]);
      family.push_back(std::move(h));
    }
    const auto rep = lr_estimate_check(family, prob);
    CheckResult r;
    r.name = name;
    r.passed = rep.passed;
    r.value = rep.worst_holdout_ratio;
    r.bound = 1.1;
    r.slack = r.bound - r.value;
    r.detail = "K1=" + Report::fmt(rep.K1) + " K2=" + Report::fmt(rep.K2) +
               " fit_feasible=" + (rep.fit_feasible ? "true" : "false") +
               " all_converged=" + (rep.all_converged ? "true" : "false");
    return r;
  }
  if (name == "nemytsky_bound") {
    const auto& f = *s.nonlinearity;
    auto draw = [&] {
      std::uniform_real_distribution<double> logamp(-2.0, 2.0);
      const double amp = std::pow(10.0, logamp(rng));
      Grid u = random_sine_series(mesh.omega(), rng).sample(mesh);
      for (auto& v : u) v *= amp;
      return u;
    };
    std::vector<Grid> calib;
    for (int k = 0; k < n; ++k) calib.push_back(draw());
    const double C = calibrate_nemytsky_constant(f, mesh, p, s.r, calib);
    detail::Tally t;
    t.name = name;
    for (int k = 0; k < n; ++k) t.add(nemytsky_bound_check(f, mesh, p, s.r, draw(), C));
    auto r = t.result();
    r.detail += " C=" + Report::fmt(C);
    return r;
  }
  if (name == "equivalence") {
    const PoissonSolution sol = solved ? *solved : solve_poisson(prob);
    auto rep = minimizer_equivalence_check(sol, prob, n, rng);
    return rep.check;
  }
  throw Error(Errc::config, "unknown check " + name);
}

struct RunOutcome {
  int exit_code = exit_ok;
  std::string report;
};

/// Executes one configured run and writes its files into `out_dir`.
inline RunOutcome run(const RunConfig& c) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  const auto t_start = clock::now();

  Report rep;
  rep.add("mode", std::string(mode_name(c.mode)));
  rep.add("seed", std::to_string(c.seed));
  rep.add("config", c.document.dump());

  const std::filesystem::path dir(c.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create output directory " + dir.string() + ": " + ec.message());

  bool converged = true;
  bool checks_ok = true;

  const auto t_setup = clock::now();
  const Mesh mesh0 = build_mesh(c.R, c.n_cells, c.omega);
  const ExponentField p0(catalog::make_field(c.exponent), c.s, mesh0, c.dimension);
  const auto val = validate_exponent_field(p0, mesh0);
  rep.add("validation.symmetry_defect", val.symmetry_defect);
  rep.add("validation.p_minus", val.p_minus);
  rep.add("validation.p_plus", val.p_plus);
  rep.add("validation.s", val.s);
  rep.add("validation.N", val.dimension);
  rep.add("validation.symmetric", val.symmetric);
  rep.add("validation.lower_bound", val.lower_bound);
  rep.add("validation.subcritical", val.subcritical);
  rep.add("validation.passed", val.passed());
  if (!val.passed()) {
    rep.add("status", std::string("validation_failed"));
    write_text(dir / "report.txt", rep.str());
    return {exit_check_failed, rep.str()};
  }

  const Setup s = build_setup(c);
  const auto& mesh = s.problem.mesh();
  rep.add("mesh.cell_width", mesh.width());
  rep.add("mesh.interior_cells", static_cast<int>(mesh.interior_indices().size()));
  rep.add("mesh.omega_measure", mesh.omega_measure());
  rep.add("r.lower", s.r.lower());
  rep.add("r.upper", s.r.upper());
  rep.add("r.default", !c.r_exponent.has_value());
  rep.add("timing.setup_s", seconds(t_setup));
  if (c.dump_weights) write_weights_csv(s.problem.weights(), (dir / "weights.csv").string());

  std::mt19937_64 rng(c.seed);
  std::optional<PoissonSolution> poisson_solution;
  std::optional<Grid> solution;

  const auto t_solve = clock::now();
  if (c.mode == Mode::poisson || c.mode == Mode::verify) {
    auto sol = solve_poisson(s.problem);
    rep.add("solver.energy", sol.energy);
    rep.add("solver.el_residual", sol.el_residual);
    rep.add("solver.iterations", sol.iterations);
    rep.add("solver.converged", sol.converged);
    rep.add("norm.r_omega", luxemburg_norm(mesh, sol.u, s.r, mesh.interior_mask()));
    rep.add("norm.gagliardo", gagliardo_seminorm(mesh, s.problem.weights(), sol.u, Domain::whole_line));
    converged = sol.converged;
    solution = sol.u;
    poisson_solution = std::move(sol);
  } else if (c.mode == Mode::semilinear || c.mode == Mode::decompose) {
    FixedPointOptions fo;
    fo.theta = c.theta;
    fo.max_iterations = c.fp_max_iter;
    fo.tolerance = c.fp_tol;
    fo.inner_residual = c.inner_residual;
    fo.adaptive_damping = c.adaptive_damping;
    const auto screen = growth_screen(*s.nonlinearity, mesh, s.problem.exponent());
    rep.add_check(screen);
    if (!screen.passed) throw Error(Errc::growth_violation, screen.detail);
    if (c.mode == Mode::semilinear) {
      const auto res = fixed_point_solve(*s.nonlinearity, s.problem, fo);
      rep.add("fixedpoint.iterations", static_cast<int>(res.trace.iterates.size()));
      rep.add("fixedpoint.theta_final", res.trace.theta);
      rep.add("fixedpoint.final_increment",
              res.trace.iterates.empty() ? 0.0 : res.trace.iterates.back().increment);
      rep.add("fixedpoint.certificate", res.trace.certificate);
      rep.add("fixedpoint.semilinear_residual", res.trace.semilinear_residual);
      rep.add("fixedpoint.converged", res.trace.converged);
      rep.add("solver.energy", res.solution.energy);
      write_text(dir / "trace.csv", fixed_point_csv(res.trace));
      converged = res.trace.converged && res.trace.semilinear_residual <= 1e-6;
      solution = res.solution.u;
    } else {
      DecompositionOptions dopt;
      dopt.shells = c.shells;
      dopt.max_sweeps = c.max_sweeps;
      dopt.sweep_tolerance = c.sweep_tolerance;
      dopt.residual_gate = c.residual_gate;
      dopt.fixed_point = fo;
      const auto res = solve_by_decomposition(*s.nonlinearity, s.problem, dopt);
      rep.add("decompose.shells", c.shells);
      for (int j = 0; j < c.shells; ++j) {
        rep.add("decompose.shell" + std::to_string(j) + ".measure", res.shells.at(j).measure);
      }
      rep.add("decompose.sweeps", res.sweeps);
      rep.add("decompose.global_residual", res.global_residual);
      rep.add("decompose.converged", res.converged);
      rep.add("solver.energy", res.solution.energy);
      write_text(dir / "trace.csv", decomposition_csv(res));
      converged = res.converged;
      solution = res.solution.u;
    }
  }
  rep.add("timing.solve_s", seconds(t_solve));

  // On nonlinear runs the equivalence check treats the final iterate as the
  // Poisson solution with source N_f(u).
  const bool nonlinear = c.mode == Mode::semilinear || c.mode == Mode::decompose;
  Setup check_setup = s;
  if (nonlinear && converged) {
    check_setup.problem = with_source(s.problem, nemytsky(*s.nonlinearity, mesh, *solution, mesh.interior_mask()));
    PoissonSolution ps;
    ps.u = *solution;
    ps.converged = true;
    poisson_solution = std::move(ps);
  }
  const auto t_checks = clock::now();
  for (const auto& name : c.checks) {
    const auto t0 = clock::now();
    if (name == "equivalence" && (!converged || !poisson_solution)) {
      CheckResult r;
      r.name = name;
      r.detail = "skipped: solver did not converge";
      rep.add_check(r);
      checks_ok = false;
      continue;
    }
    auto r = run_check(name, c, check_setup, poisson_solution, rng);
    r.name = name;
    rep.add_check(r, "time_s=" + Report::fmt(seconds(t0)));
    checks_ok = checks_ok && r.passed;
  }
  rep.add("timing.checks_s", seconds(t_checks));

  if (solution) write_text(dir / "solution.csv", solution_csv(mesh, *solution));

  int code = exit_ok;
  if (!converged) {
    code = exit_not_converged;
  } else if (!checks_ok) {
    code = exit_check_failed;
  }
  rep.add("status", std::string(code == exit_ok ? "ok" : code == exit_not_converged ? "not_converged" : "check_failed"));
  rep.add("exit_code", code);
  rep.add("timing.total_s", seconds(t_start));
  write_text(dir / "report.txt", rep.str());
  return {code, rep.str()};
}

}  // namespace fracpx
