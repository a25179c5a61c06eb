#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fracpx/error.hpp"
#include "fracpx/exponents.hpp"
#include "fracpx/mesh.hpp"

namespace fracpx {

namespace detail {

// Second antiderivative of t^{-alpha}, up to an affine term, vanishing at
// t = 0 when alpha < 2.
inline long double power_second_antiderivative(long double t, long double alpha) {
  if (t == 0.0L) return 0.0L;
  if (std::fabs(alpha - 1.0L) < 1e-14L) return t * std::log(t);
  if (std::fabs(alpha - 2.0L) < 1e-14L) return -std::log(t);
  return std::pow(t, 2.0L - alpha) / ((1.0L - alpha) * (2.0L - alpha));
}

}  // namespace detail

/// Exact value of the integral of |x - y|^{-alpha} over two disjoint cells
/// of width h whose centers are a distance d >= h apart.
///
/// Near pairs use the second difference of the antiderivative in extended
/// precision; far pairs (d >= 16 h) use its even Taylor expansion, which
/// avoids the cancellation of the three-term difference.
inline double cell_pair_weight(double d, double h, double alpha) {
  if (d >= 16.0 * h) {
    const double r2 = (h / d) * (h / d);
    // sum_m 2 (alpha)_{2m} / (2m+2)! r^{2m}
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 12; ++m) {
      const double k = 2.0 * m;
      term *= (alpha + k - 2.0) * (alpha + k - 1.0) / ((k + 1.0) * (k + 2.0)) * r2;
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return h * h * std::pow(d, -alpha) * sum;
  }
  const long double D = d, H = h, a = alpha;
  using detail::power_second_antiderivative;
  const long double near = (D - H) <= 0.0L ? 0.0L : power_second_antiderivative(D - H, a);
  return static_cast<double>(power_second_antiderivative(D + H, a) - 2.0L * power_second_antiderivative(D, a) +
                             near);
}

/// Integral over |y| > R of |x - y|^{-(1 + sigma)} dy for x in (-R, R).
inline double tail_contribution(double x, double radius, double sigma) {
  return (std::pow(x + radius, -sigma) + std::pow(radius - x, -sigma)) / sigma;
}

struct KernelOptions {
  /// When false the exterior-of-box contribution is dropped (R -> infinity
  /// with u vanishing outside the box is no longer modelled).
  bool include_tails = true;
};

/// Pairwise weights of the piecewise-constant discretization of the kernel
/// |x - y|^{-(1 + s p(x, y))}, with the exponent frozen at cell-center pairs.
class KernelWeights {
 public:
  KernelWeights() = default;
  KernelWeights(int n, double width) : n_(n), width_(width), w_(std::size_t(n) * n, 0.0), p_(std::size_t(n) * n, 0.0),
                                       tail_(n, 0.0), p_diag_(n, 0.0) {}

  int size() const { return n_; }
  double cell_width() const { return width_; }
  double weight(int i, int j) const { return w_[std::size_t(i) * n_ + j]; }
  double exponent(int i, int j) const { return p_[std::size_t(i) * n_ + j]; }
  /// Per-unit-length exterior tail at the cell center.
  double tail(int i) const { return tail_[i]; }
  /// Coefficient of |u_i|^{p(x_i,x_i)} in the whole-line modular: the tail
  /// integrated over the cell, counted for both orderings of (x, y).
  double tail_coefficient(int i) const { return 2.0 * width_ * tail_[i]; }
  double diagonal_exponent(int i) const { return p_diag_[i]; }

  const double* weight_row(int i) const { return w_.data() + std::size_t(i) * n_; }
  const double* exponent_row(int i) const { return p_.data() + std::size_t(i) * n_; }

  void set_pair(int i, int j, double w, double p) {
    w_[std::size_t(i) * n_ + j] = w;
    w_[std::size_t(j) * n_ + i] = w;
    p_[std::size_t(i) * n_ + j] = p;
    p_[std::size_t(j) * n_ + i] = p;
  }
  void set_diagonal(int i, double tail, double p) {
    tail_[i] = tail;
    p_diag_[i] = p;
    p_[std::size_t(i) * n_ + i] = p;
  }

 private:
  int n_ = 0;
  double width_ = 0.0;
  std::vector<double> w_;
  std::vector<double> p_;
  std::vector<double> tail_;
  std::vector<double> p_diag_;
};

inline KernelWeights assemble_weights(const Mesh& mesh, const ExponentField& p, KernelOptions options = {}) {
  const int n = mesh.size();
  const double h = mesh.width();
  const double s = p.order();
  KernelWeights W(n, h);
  for (int i = 0; i < n; ++i) {
    const double xi = mesh.center(i);
    const double pbar = p.trace(xi);
    const double tail = options.include_tails ? tail_contribution(xi, mesh.radius(), s * pbar) : 0.0;
    W.set_diagonal(i, tail, pbar);
    for (int j = i + 1; j < n; ++j) {
      const double pij = p(xi, mesh.center(j));
      if (j == i + 1 && s * pij >= 1.0) {
        std::ostringstream os;
        os << "adjacent cells " << i << ", " << j << " have s*p = " << s * pij
           << " >= 1; the piecewise-constant energy is infinite";
        throw Error(Errc::non_integrable_adjacency, os.str());
      }
      W.set_pair(i, j, cell_pair_weight((j - i) * h, h, 1.0 + s * pij), pij);
    }
  }
  return W;
}

/// Mesh, exponent and weights of one discrete problem.
struct Discretization {
  Mesh mesh;
  ExponentField p;
  KernelWeights weights;
};

inline std::shared_ptr<const Discretization> make_discretization(const Mesh& mesh, const ExponentField& p,
                                                                 KernelOptions options = {}) {
  auto W = assemble_weights(mesh, p, options);
  return std::make_shared<const Discretization>(Discretization{mesh, p, std::move(W)});
}

/// CSV dump (i, j, w, p) of the upper triangle, for inspection.
inline void write_weights_csv(const KernelWeights& W, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot open " + path + " for writing");
  out << "i,j,w,p\n";
  char buf[128];
  for (int i = 0; i < W.size(); ++i) {
    for (int j = i + 1; j < W.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", i, j, W.weight(i, j), W.exponent(i, j));
      out << buf;
    }
  }
  if (!out) throw Error(Errc::io, "failed writing " + path);
}

}  // namespace fracpx
