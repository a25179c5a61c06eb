#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fracpx/poisson.hpp"

namespace fracpx::testing {

/// Direct minimization of the semilinear potential energy for p = 2 and
/// f(x, t) = 1 + cos(x) / 2 + eps atan(t): dense Newton on the interior
/// values, gradient A u - b - f(x, u) h, Hessian A - diag(f_t h).
inline Grid arctan_newton_oracle(const PoissonProblem& prob, double eps) {
  const auto& m = prob.mesh();
  const auto& W = prob.weights();
  const auto& idx = m.interior_indices();
  const int k = static_cast<int>(idx.size());
  const double h = m.width();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < k; ++a) {
    const int i = idx[a];
    double diag = W.tail_coefficient(i);
    for (int j = 0; j < m.size(); ++j) {
      if (j == i) continue;
      diag += 2.0 * W.weight(i, j);
      if (m.interior(j)) {
        const int c = static_cast<int>(std::find(idx.begin(), idx.end(), j) - idx.begin());
        A(a, c) -= 2.0 * W.weight(i, j);
      } else {
        b(a) += 2.0 * W.weight(i, j) * prob.fixed[j];
      }
    }
    A(a, a) += diag;
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd grad = A * u - b;
    Eigen::MatrixXd H = A;
    for (int a = 0; a < k; ++a) {
      const double x = m.center(idx[a]);
      grad(a) -= (1.0 + 0.5 * std::cos(x) + eps * std::atan(u(a))) * h;
      H(a, a) -= eps / (1.0 + u(a) * u(a)) * h;
    }
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    u -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  Grid out = prob.fixed;
  for (int a = 0; a < k; ++a) out[idx[a]] = u(a);
  return out;
}

}  // namespace fracpx::testing
