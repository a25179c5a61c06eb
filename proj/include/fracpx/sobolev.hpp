#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fracpx/kernel.hpp"
#include "fracpx/lebesgue.hpp"
#include "fracpx/numeric.hpp"

namespace fracpx {

/// Which double integral a Gagliardo quantity refers to.
enum class Domain {
  /// All box pairs plus the exterior-of-box tails.
  whole_line,
  /// Pairs with at least one cell in Omega; no tails.
  omega,
};

inline std::vector<PowerTerm> gagliardo_terms(const Mesh& mesh, const KernelWeights& W, std::span<const double> u,
                                              Domain domain = Domain::whole_line) {
  const int n = W.size();
  std::vector<PowerTerm> terms;
  terms.reserve(std::size_t(n) * (n - 1) / 2 + n);
  for (int i = 0; i < n; ++i) {
    const double* w = W.weight_row(i);
    const double* p = W.exponent_row(i);
    for (int j = i + 1; j < n; ++j) {
      if (domain == Domain::omega && !mesh.interior(i) && !mesh.interior(j)) continue;
      terms.push_back({2.0 * w[j], std::abs(u[i] - u[j]), p[j]});
    }
  }
  if (domain == Domain::whole_line) {
    for (int i = 0; i < n; ++i) terms.push_back({W.tail_coefficient(i), std::abs(u[i]), W.diagonal_exponent(i)});
  }
  return terms;
}

/// Discrete double integral of |u(x)-u(y)|^{p(x,y)} |x-y|^{-(1+s p(x,y))}.
inline double gagliardo_modular(const Mesh& mesh, const KernelWeights& W, std::span<const double> u,
                                Domain domain = Domain::whole_line) {
  const auto terms = gagliardo_terms(mesh, W, u, domain);
  return evaluate_modular(terms);
}

inline double gagliardo_seminorm(const Mesh& mesh, const KernelWeights& W, std::span<const double> u,
                                 Domain domain = Domain::whole_line) {
  const auto terms = gagliardo_terms(mesh, W, u, domain);
  return checked_norm(luxemburg_from_terms(terms), "gagliardo_seminorm");
}

/// Seminorm over Omega plus the L^q norm over Omega.
inline double full_norm(const Mesh& mesh, const KernelWeights& W, std::span<const double> u, const ScalarExponent& q,
                        Domain domain = Domain::omega) {
  return gagliardo_seminorm(mesh, W, u, domain) + luxemburg_norm(mesh, u, q, mesh.interior_mask());
}

/// Cell average over cell i of the principal-value operator.
inline double apply_operator(const KernelWeights& W, std::span<const double> u, int i) {
  const int n = W.size();
  const double* w = W.weight_row(i);
  const double* p = W.exponent_row(i);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    acc += w[j] * signed_power(u[i] - u[j], p[j]);
  }
  acc += W.cell_width() * W.tail(i) * signed_power(u[i], W.diagonal_exponent(i));
  return acc / W.cell_width();
}

/// <L(u), phi>
inline double weak_form(const KernelWeights& W, std::span<const double> u, std::span<const double> phi) {
  const int n = W.size();
  std::vector<double> buf;
  buf.reserve(std::size_t(n) * (n - 1) / 2 + n);
  for (int i = 0; i < n; ++i) {
    const double* w = W.weight_row(i);
    const double* p = W.exponent_row(i);
    for (int j = i + 1; j < n; ++j) {
      const double dphi = phi[i] - phi[j];
      if (dphi == 0.0) continue;
      buf.push_back(2.0 * w[j] * signed_power(u[i] - u[j], p[j]) * dphi);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (phi[i] == 0.0) continue;
    buf.push_back(W.tail_coefficient(i) * signed_power(u[i], W.diagonal_exponent(i)) * phi[i]);
  }
  return pairwise_sum(buf);
}

/// <L(u), e_k> for every cell k in `active`: the gradient of the Gagliardo
/// energy. Zero elsewhere.
inline Grid weak_form_coordinates(const KernelWeights& W, std::span<const double> u, const CellMask& active) {
  const int n = W.size();
  Grid out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (!active[i]) continue;
    const double* w = W.weight_row(i);
    const double* p = W.exponent_row(i);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += w[j] * signed_power(u[i] - u[j], p[j]);
    }
    out[i] = 2.0 * acc + W.tail_coefficient(i) * signed_power(u[i], W.diagonal_exponent(i));
  }
  return out;
}

/// ||u||_{p(x,x), Omega} / [u]_{whole line}; the Poincare ratio of a
/// function vanishing outside Omega.
inline double poincare_ratio(const Mesh& mesh, const ExponentField& p, const KernelWeights& W,
                             std::span<const double> u) {
  const auto pbar = trace_exponent(p);
  const double num = luxemburg_norm(mesh, u, pbar, mesh.interior_mask());
  const double den = gagliardo_seminorm(mesh, W, u, Domain::whole_line);
  return num / den;
}

}  // namespace fracpx
