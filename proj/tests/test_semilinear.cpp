#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracpx/sampling.hpp"
#include "fracpx/semilinear.hpp"
#include "potential_oracle.hpp"
#include "support.hpp"

using namespace fracpx;
using fracpx::testing::make_problem;
using fracpx::testing::ProblemSpec;

namespace {

ProblemSpec arctan_spec(int n = 96) {
  ProblemSpec ps;
  ps.R = 2.0;
  ps.n = n;
  ps.s = 0.4;
  ps.r = 3.0;
  ps.h = [](double) { return 0.0; };
  ps.g = [](double x) { return 0.5 * (1.0 - x * x / 4.0); };
  return ps;
}

Nonlinearity arctan_f(const Mesh& mesh, double eps = 0.05) {
  auto a = [](double x) { return 1.0 + 0.5 * std::cos(x); };
  Nonlinearity f;
  f.f = [a, eps](double x, double t) { return a(x) + eps * std::atan(t); };
  f.potential = [a, eps](double x, double t) { return a(x) * t + eps * (t * std::atan(t) - 0.5 * std::log1p(t * t)); };
  f.a.resize(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) f.a[i] = a(mesh.center(i));
  f.C_growth = eps;
  return f;
}

double max_diff(const Grid& a, const Grid& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Nemytsky, Examples) {
  const auto prob = make_problem(arctan_spec(32));
  const auto& m = prob.mesh();
  const auto& omega = m.interior_mask();
  Nonlinearity id{[](double, double t) { return t; }, Grid(m.size(), 0.0), 1.0, {}};
  for (double v : nemytsky(id, m, Grid(m.size(), 0.0), omega)) EXPECT_EQ(v, 0.0);

  Nonlinearity src{[](double x, double) { return std::sin(x); }, Grid(m.size(), 1.0), 0.0, {}};
  std::mt19937_64 rng(1);
  const Grid u = random_cell_function(m, omega, rng);
  const Grid out = nemytsky(src, m, u, omega);
  for (int i = 0; i < m.size(); ++i) EXPECT_EQ(out[i], m.interior(i) ? std::sin(m.center(i)) : 0.0);

  const ExponentField p([](double x, double y) { return 1.7 + 0.1 * (x + y) * (x + y); }, 0.2, m);
  Nonlinearity pw{[p](double x, double t) { return signed_power(t, p.trace(x)); }, Grid(m.size(), 0.0), 1.0, {}};
  for (int i : m.interior_indices()) EXPECT_EQ(nemytsky(pw, m, Grid(m.size(), 1.0), omega)[i], 1.0);
}

TEST(Nemytsky, NonFiniteNamesCell) {
  const auto prob = make_problem(arctan_spec(32));
  Nonlinearity bad{[](double, double t) { return 1.0 / t; }, Grid(32, 0.0), 0.0, {}};
  try {
    nemytsky(bad, prob.mesh(), Grid(32, 0.0), prob.mesh().interior_mask());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite);
    EXPECT_NE(std::string(e.what()).find("cell"), std::string::npos);
  }
}

TEST(GrowthScreen, AcceptsAndRejects) {
  const auto prob = make_problem(arctan_spec(32));
  const auto& m = prob.mesh();
  EXPECT_TRUE(growth_screen(arctan_f(m), m, prob.exponent()).passed);
  Nonlinearity quad{[](double, double t) { return t * t; }, Grid(m.size(), 0.0), 10.0, {}};
  const auto r = growth_screen(quad, m, prob.exponent());
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.detail.empty());
  auto under = arctan_f(m);
  under.C_growth = 0.01;
  EXPECT_FALSE(growth_screen(under, m, prob.exponent()).passed);
  EXPECT_THROW(fixed_point_solve(quad, prob), Error);
}

TEST(NemytskyBound, GammaArithmetic) {
  const auto prob = make_problem(arctan_spec(64));
  const double measure = prob.mesh().omega_measure();
  EXPECT_NEAR(c_omega_gamma(prob.mesh(), prob.exponent(), prob.r), 2.0 * std::pow(measure, 1.0 / 6.0), 1e-14);
}

TEST(NemytskyBound, ZeroAndHoldout) {
  const auto prob = make_problem(arctan_spec(64));
  const auto& m = prob.mesh();
  Nonlinearity zero{[](double, double) { return 0.0; }, Grid(m.size(), 0.0), 0.0, {}};
  EXPECT_TRUE(nemytsky_bound_check(zero, m, prob.exponent(), prob.r, Grid(m.size(), 0.0), 0.0).passed);

  std::mt19937_64 rng(2);
  const auto f = arctan_f(m, 0.3);
  auto draw = [&] {
    std::uniform_real_distribution<double> L(-2.0, 2.0);
    Grid u = random_sine_series(m.omega(), rng).sample(m);
    const double amp = std::pow(10.0, L(rng));
    for (auto& v : u) v *= amp;
    return u;
  };
  std::vector<Grid> calib;
  for (int k = 0; k < 200; ++k) calib.push_back(draw());
  const double C = calibrate_nemytsky_constant(f, m, prob.exponent(), prob.r, calib);
  EXPECT_GT(C, 0.0);
  for (int k = 0; k < 200; ++k) EXPECT_TRUE(nemytsky_bound_check(f, m, prob.exponent(), prob.r, draw(), C).passed);
}

TEST(FixedPoint, SourceOnlyConvergesImmediately) {
  const auto prob = make_problem(arctan_spec(64));
  const auto& m = prob.mesh();
  Nonlinearity src{[](double x, double) { return 1.0 + x; }, Grid(m.size(), 2.0), 0.0, {}};
  const auto res = fixed_point_solve(src, prob);
  EXPECT_TRUE(res.trace.converged);
  EXPECT_EQ(res.trace.iterates.size(), 1u);
  Grid h = prob.source;
  for (int i : m.interior_indices()) h[i] = 1.0 + m.center(i);
  const auto direct = solve_poisson(with_source(prob, h));
  EXPECT_LT(max_diff(res.solution.u, direct.u), 1e-8);
}

TEST(FixedPoint, ZeroDataZeroSolution) {
  auto ps = arctan_spec(48);
  ps.g = [](double) { return 0.0; };
  const auto prob = make_problem(ps);
  Nonlinearity zero{[](double, double) { return 0.0; }, Grid(48, 0.0), 0.0, {}};
  const auto res = fixed_point_solve(zero, prob);
  EXPECT_TRUE(res.trace.converged);
  for (double v : res.solution.u) EXPECT_EQ(v, 0.0);
}

TEST(FixedPoint, ArctanMatchesNewtonOnPotential) {
  const auto prob = make_problem(arctan_spec(96));
  const auto f = arctan_f(prob.mesh());
  const auto res = fixed_point_solve(f, prob);
  ASSERT_TRUE(res.trace.converged);
  EXPECT_LE(res.trace.iterates.back().increment, 1e-8);
  EXPECT_LE(res.trace.certificate, 2e-8);
  EXPECT_LE(res.trace.semilinear_residual, 1e-6);
  EXPECT_LT(max_diff(res.solution.u, fracpx::testing::arctan_newton_oracle(prob, 0.05)), 1e-5);
}

TEST(FixedPoint, PassesEquivalenceOnSemilinearEnergy) {
  const auto prob = make_problem(arctan_spec(64));
  const auto f = arctan_f(prob.mesh());
  const auto res = fixed_point_solve(f, prob);
  ASSERT_TRUE(res.trace.converged);
  const auto& m = prob.mesh();
  const auto zero_src = with_source(prob, Grid(m.size(), 0.0));
  auto sem_energy = [&](const Grid& u) {
    double e = energy(zero_src, u);
    for (int i : m.interior_indices()) e -= f.potential(m.center(i), u[i]) * m.width();
    return e;
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0), L(-3.0, 0.0);
  const double e0 = sem_energy(res.solution.u);
  for (int k = 0; k < 100; ++k) {
    Grid v = res.solution.u;
    const double scale = std::pow(10.0, L(rng));
    for (int i : m.interior_indices()) v[i] += scale * U(rng);
    EXPECT_GE(sem_energy(v), e0 - 1e-8);
  }
}

TEST(FixedPoint, UndampedStiffIterationDiverges) {
  auto ps = arctan_spec(48);
  const auto prob = make_problem(ps);
  const auto& m = prob.mesh();
  Nonlinearity stiff{[](double, double t) { return 1.0 - 200.0 * t; }, Grid(m.size(), 1.0), 200.0, {}};
  FixedPointOptions opt;
  opt.theta = 1.0;
  opt.max_iterations = 15;
  opt.adaptive_damping = false;
  const auto res = fixed_point_solve(stiff, prob, opt);
  EXPECT_FALSE(res.trace.converged);
  for (std::size_t k = 1; k < res.trace.iterates.size(); ++k) {
    EXPECT_GT(res.trace.iterates[k].increment, res.trace.iterates[k - 1].increment);
  }

  // Adaptive damping recovers convergence.
  FixedPointOptions damped;
  damped.theta = 1.0;
  damped.max_iterations = 400;
  const auto ok = fixed_point_solve(stiff, prob, damped);
  EXPECT_TRUE(ok.trace.converged);
  EXPECT_LT(ok.trace.theta, 1.0);
}

TEST(InvariantBall, Formula) {
  InvariantBallInputs in{2.0, 0.5, 0.0, 1.0, 1.2, 1.5, 2.5};
  auto b = invariant_ball_radius(in);
  EXPECT_TRUE(b.feasible);
  const double cp = std::pow(1.2, 1.5), cm = std::pow(1.2, 0.5);
  EXPECT_NEAR(b.radius, std::pow(2.0 * (1.0 + 0.5 * cp + 0.5 * cm), 0.5 / 1.5), 1e-14);

  in.K2 = 1.0 / (cp + cm);
  EXPECT_FALSE(invariant_ball_radius(in).feasible);
}

TEST(InvariantBall, ShrinkingOmegaBecomesFeasible) {
  const ExponentField::Evaluator pf = [](double, double) { return 2.0; };
  bool was_feasible = false;
  bool first = true;
  double prev_c = INFINITY;
  for (double half : {2.0, 1.0, 0.5, 0.25, 0.125, 0.0625}) {
    const auto mesh = build_mesh(2.0 * half + 1.0, 256, {{-half, half}});
    const ExponentField p(pf, 0.3, mesh);
    const ScalarExponent r([](double) { return 3.0; }, mesh.centers());
    const double c = c_omega_gamma(mesh, p, r);
    EXPECT_LT(c, prev_c);
    prev_c = c;
    const auto b = invariant_ball_radius({1.0, 0.2, 0.2, 1.0, c, 2.0, 2.0});
    if (first) {
      EXPECT_FALSE(b.feasible);
    }
    if (was_feasible) {
      EXPECT_TRUE(b.feasible);
    }
    first = false;
    was_feasible = was_feasible || b.feasible;
  }
  EXPECT_TRUE(was_feasible);
}

TEST(ShellPartition, Telescopes) {
  const auto mesh = build_mesh(2.0, 77, {{-1.5, -0.2}, {0.1, 1.0}});
  for (int M : {1, 2, 3, 5, 8}) {
    const auto parts = shell_partition(mesh, M);
    ASSERT_EQ(parts.size(), static_cast<std::size_t>(M));
    CellMask cover(mesh.size(), 0);
    for (const auto& part : parts) {
      EXPECT_GT(count(part), 0);
      for (int i = 0; i < mesh.size(); ++i) {
        EXPECT_FALSE(part[i] && cover[i]);
        cover[i] |= part[i];
      }
    }
    EXPECT_EQ(cover, mesh.interior_mask());
  }
  EXPECT_THROW(shell_partition(mesh, 0), Error);
}

TEST(Decomposition, SingleShellIsFixedPoint) {
  const auto prob = make_problem(arctan_spec(64));
  const auto f = arctan_f(prob.mesh());
  DecompositionOptions opt;
  opt.shells = 1;
  const auto d = solve_by_decomposition(f, prob, opt);
  const auto fp = fixed_point_solve(f, prob);
  EXPECT_TRUE(d.converged);
  EXPECT_EQ(d.sweeps, 1);
  EXPECT_LT(max_diff(d.solution.u, fp.solution.u), 1e-8);
}

TEST(Decomposition, SourceOnlyMatchesPoisson) {
  const auto prob = make_problem(arctan_spec(64));
  const auto& m = prob.mesh();
  Nonlinearity src{[](double x, double) { return 1.0 + 0.5 * x; }, Grid(m.size(), 2.0), 0.0, {}};
  const auto d = solve_by_decomposition(src, prob);
  Grid h = prob.source;
  for (int i : m.interior_indices()) h[i] = 1.0 + 0.5 * m.center(i);
  const auto direct = solve_poisson(with_source(prob, h));
  EXPECT_TRUE(d.converged);
  EXPECT_LT(max_diff(d.solution.u, direct.u), 1e-6);
  EXPECT_EQ(d.shells.size(), static_cast<std::size_t>(3 * d.sweeps));
}
