#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracpx/sampling.hpp"
#include "fracpx/sobolev.hpp"

using namespace fracpx;

namespace {

struct Fixture {
  Mesh mesh;
  ExponentField p;
  KernelWeights W;
};

Fixture make(int n, ExponentField::Evaluator f, double s = 0.3, bool tails = true, double R = 2.0) {
  const auto mesh = build_mesh(R, n, {{-1.0, 1.0}});
  ExponentField p(std::move(f), s, mesh);
  auto W = assemble_weights(mesh, p, {tails});
  return {mesh, p, std::move(W)};
}

Grid random_grid(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  Grid u(n);
  for (auto& v : u) v = U(rng);
  return u;
}

Grid supported_in(const Mesh& m, Grid v) {
  for (int i = 0; i < m.size(); ++i) {
    if (!m.interior(i)) v[i] = 0.0;
  }
  return v;
}

double variable_p(double x, double y) { return 2.0 + 0.5 * std::exp(-(x - y) * (x - y)); }

}  // namespace

TEST(ApplyOperator, ZeroConstantAndOdd) {
  std::mt19937_64 rng(1);
  const auto fx = make(24, variable_p, 0.3, false);
  const Grid zero(24, 0.0), c(24, 3.5);
  for (int i : fx.mesh.interior_indices()) {
    EXPECT_EQ(apply_operator(fx.W, zero, i), 0.0);
    EXPECT_EQ(apply_operator(fx.W, c, i), 0.0);
  }
  const Grid u = random_grid(24, rng);
  Grid neg = u;
  for (auto& v : neg) v = -v;
  for (int i : fx.mesh.interior_indices()) EXPECT_EQ(apply_operator(fx.W, neg, i), -apply_operator(fx.W, u, i));
}

TEST(WeakForm, ZeroTestAndPositivity) {
  std::mt19937_64 rng(2);
  const auto fx = make(24, variable_p);
  const Grid zero(24, 0.0);
  for (int k = 0; k < 20; ++k) {
    const Grid u = random_grid(24, rng);
    EXPECT_EQ(weak_form(fx.W, u, zero), 0.0);
    EXPECT_GT(weak_form(fx.W, u, u), 0.0);
  }
  EXPECT_EQ(weak_form(fx.W, zero, zero), 0.0);
}

TEST(WeakForm, IdentityBruteForceSixCells) {
  // Direct expansion of both sides on a 6-cell mesh.
  const auto mesh = build_mesh(1.5, 6, {{-1.0, 1.0}});
  const ExponentField p(variable_p, 0.3, mesh);
  const auto W = assemble_weights(mesh, p);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Grid u = random_grid(6, rng);
    const Grid phi = supported_in(mesh, random_grid(6, rng));
    double lhs = 0.0;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (i == j) continue;
        const double d = u[i] - u[j];
        lhs += W.weight(i, j) * std::pow(std::abs(d), W.exponent(i, j) - 2.0) * d * (phi[i] - phi[j]);
      }
      lhs += 2.0 * mesh.width() * W.tail(i) * std::pow(std::abs(u[i]), W.diagonal_exponent(i) - 2.0) * u[i] * phi[i];
    }
    double rhs = 0.0;
    for (int i : mesh.interior_indices()) rhs += 2.0 * phi[i] * apply_operator(W, u, i) * mesh.width();
    EXPECT_NEAR(weak_form(W, u, phi), lhs, 1e-12 * std::abs(lhs));
    EXPECT_NEAR(weak_form(W, u, phi), rhs, 1e-12 * std::abs(rhs));
  }
}

TEST(WeakForm, SymmetricInLinearCase) {
  std::mt19937_64 rng(4);
  const auto fx = make(40, [](double, double) { return 2.0; }, 0.4);
  for (int k = 0; k < 20; ++k) {
    const Grid u = random_grid(40, rng), v = random_grid(40, rng);
    const double a = weak_form(fx.W, u, v), b = weak_form(fx.W, v, u);
    EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST(WeakForm, Monotone) {
  std::mt19937_64 rng(5);
  for (double pv : {1.3, 2.0, 3.0}) {
    const auto fx = make(32, [pv](double x, double y) { return pv + 0.2 * std::exp(-(x - y) * (x - y)); }, 0.2);
    for (int k = 0; k < 50; ++k) {
      const Grid u = random_grid(32, rng), v = random_grid(32, rng);
      Grid d(32);
      for (int i = 0; i < 32; ++i) d[i] = u[i] - v[i];
      EXPECT_GE(weak_form(fx.W, u, d) - weak_form(fx.W, v, d), 0.0);
    }
  }
}

TEST(WeakForm, CoordinatesMatchWeakForm) {
  std::mt19937_64 rng(6);
  const auto fx = make(20, variable_p);
  const Grid u = random_grid(20, rng);
  const auto g = weak_form_coordinates(fx.W, u, fx.mesh.interior_mask());
  for (int i = 0; i < 20; ++i) {
    Grid e(20, 0.0);
    e[i] = 1.0;
    const double expect = fx.mesh.interior(i) ? weak_form(fx.W, u, e) : 0.0;
    EXPECT_NEAR(g[i], expect, 1e-13 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Gagliardo, ModularAndSeminorm) {
  const auto fx = make(32, [](double, double) { return 2.0; }, 0.3, false);
  const Grid c(32, 1.25), zero(32, 0.0);
  EXPECT_EQ(gagliardo_modular(fx.mesh, fx.W, c), 0.0);
  EXPECT_EQ(gagliardo_seminorm(fx.mesh, fx.W, zero), 0.0);

  // Constant p: rho(u / lambda) = rho(u) / lambda^p, so [u] = rho^{1/p}.
  std::mt19937_64 rng(7);
  const auto tails = make(32, [](double, double) { return 2.0; }, 0.3, true);
  const Grid u = random_grid(32, rng);
  const double rho = gagliardo_modular(tails.mesh, tails.W, u);
  EXPECT_NEAR(gagliardo_seminorm(tails.mesh, tails.W, u), std::sqrt(rho), 1e-9 * std::sqrt(rho));
  // weak_form(u, u) is the p-homogeneous modular.
  EXPECT_NEAR(weak_form(tails.W, u, u), rho, 1e-12 * rho);
}

TEST(Gagliardo, OmegaDomainDropsExteriorPairs) {
  const auto fx = make(16, variable_p);
  Grid u(16, 0.0);
  u[0] = 1.0;
  u[1] = 0.5;
  u[15] = -1.0;  // all exterior
  // Only pairs touching Omega survive: exterior cell against the zero interior.
  double expect = 0.0;
  for (int i : {0, 1, 15}) {
    for (int j : fx.mesh.interior_indices()) expect += 2.0 * fx.W.weight(i, j) * std::pow(std::abs(u[i]), fx.W.exponent(i, j));
  }
  EXPECT_NEAR(gagliardo_modular(fx.mesh, fx.W, u, Domain::omega), expect, 1e-14 * expect);
  EXPECT_GT(gagliardo_modular(fx.mesh, fx.W, u, Domain::whole_line), expect);
}

TEST(Poincare, RatioBoundedAndStable) {
  std::mt19937_64 rng(8);
  std::vector<SineSeries> family;
  for (int k = 0; k < 100; ++k) family.push_back(random_sine_series({{-1.0, 1.0}}, rng));
  auto constant = [&](int n) {
    const auto fx = make(n, variable_p, 0.3);
    double c = 0.0;
    for (const auto& f : family) c = std::max(c, poincare_ratio(fx.mesh, fx.p, fx.W, f.sample(fx.mesh)));
    return c;
  };
  const double c1 = constant(64), c2 = constant(128);
  EXPECT_GT(c1, 0.0);
  EXPECT_LT(std::abs(c2 - c1) / c1, 0.2);
}
