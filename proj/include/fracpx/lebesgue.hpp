#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "fracpx/check.hpp"
#include "fracpx/error.hpp"
#include "fracpx/exponents.hpp"
#include "fracpx/mesh.hpp"
#include "fracpx/numeric.hpp"

namespace fracpx {

/// One summand coef * magnitude^exponent of a modular. Lebesgue and
/// Gagliardo modulars are both finite sums of these, so the Luxemburg
/// bisection is shared.
struct PowerTerm {
  double coef;
  double magnitude;
  double exponent;
};

inline double evaluate_modular(std::span<const PowerTerm> terms, double scale = 1.0) {
  std::vector<double> buf;
  buf.reserve(terms.size());
  for (const auto& t : terms) {
    buf.push_back(t.magnitude == 0.0 ? 0.0 : t.coef * std::pow(t.magnitude / scale, t.exponent));
  }
  return pairwise_sum(buf);
}

struct NormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct BisectionOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 200;
};

namespace detail {

inline NormResult bisect_norm(std::span<const PowerTerm> terms, double e_min, double e_max, BisectionOptions opt) {
  const double rho = evaluate_modular(terms);
  const double a = std::pow(rho, 1.0 / e_min);
  const double b = std::pow(rho, 1.0 / e_max);
  double lo = std::min(a, b) * (1.0 - 1e-12);
  double hi = std::max(a, b) * (1.0 + 1e-12);
  // The modular bounds guarantee the bracket; widen only if rounding broke it.
  while (evaluate_modular(terms, lo) < 1.0) lo *= 0.5;
  while (evaluate_modular(terms, hi) > 1.0) hi *= 2.0;

  NormResult r;
  r.converged = false;
  for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
    if (hi - lo <= opt.relative_tolerance * hi) {
      r.converged = true;
      break;
    }
    const double mid = 0.5 * (lo + hi);
    if (evaluate_modular(terms, mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  r.value = 0.5 * (lo + hi);
  return r;
}

}  // namespace detail

/// inf{lambda > 0 : modular(terms / lambda) <= 1} by bisection.
inline NormResult luxemburg_from_terms(std::span<const PowerTerm> terms, BisectionOptions opt = {}) {
  double e_min = std::numeric_limits<double>::infinity();
  double e_max = -std::numeric_limits<double>::infinity();
  double top = 0.0;
  for (const auto& t : terms) {
    if (t.magnitude != 0.0 && t.coef != 0.0) {
      e_min = std::min(e_min, t.exponent);
      e_max = std::max(e_max, t.exponent);
      top = std::max(top, t.magnitude);
    }
  }
  if (top == 0.0) return {0.0, 0, true};
  if (!std::isfinite(top)) throw Error(Errc::non_finite, "luxemburg norm of a non-finite function");

  // The norm is homogeneous: bisect for u / max|u| and scale back.
  std::vector<PowerTerm> scaled(terms.begin(), terms.end());
  for (auto& t : scaled) t.magnitude /= top;
  NormResult r = detail::bisect_norm(scaled, e_min, e_max, opt);
  r.value *= top;
  return r;
}

inline double checked_norm(const NormResult& r, const char* what) {
  if (!r.converged) {
    std::ostringstream os;
    os << what << ": bisection exhausted " << r.iterations << " iterations";
    throw Error(Errc::not_converged, os.str());
  }
  return r.value;
}

inline std::vector<PowerTerm> lebesgue_terms(const Mesh& mesh, std::span<const double> u, const ScalarExponent& q,
                                             const CellMask& region) {
  std::vector<PowerTerm> terms;
  for (int i = 0; i < mesh.size(); ++i) {
    if (region[i]) terms.push_back({mesh.width(), std::abs(u[i]), q(mesh.center(i))});
  }
  return terms;
}

/// Sum over region of |u_i|^{q(x_i)} times the cell width.
inline double modular(const Mesh& mesh, std::span<const double> u, const ScalarExponent& q, const CellMask& region) {
  const auto terms = lebesgue_terms(mesh, u, q, region);
  return evaluate_modular(terms);
}

inline NormResult luxemburg_norm_detailed(const Mesh& mesh, std::span<const double> u, const ScalarExponent& q,
                                          const CellMask& region, BisectionOptions opt = {}) {
  const auto terms = lebesgue_terms(mesh, u, q, region);
  return luxemburg_from_terms(terms, opt);
}

inline double luxemburg_norm(const Mesh& mesh, std::span<const double> u, const ScalarExponent& q,
                             const CellMask& region) {
  return checked_norm(luxemburg_norm_detailed(mesh, u, q, region), "luxemburg_norm");
}

/// Bounds of q over the cells of a region.
struct ExponentRange {
  double lower;
  double upper;
};

inline ExponentRange exponent_range(const Mesh& mesh, const ScalarExponent& q, const CellMask& region) {
  ExponentRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < mesh.size(); ++i) {
    if (!region[i]) continue;
    const double v = q(mesh.center(i));
    r.lower = std::min(r.lower, v);
    r.upper = std::max(r.upper, v);
  }
  return r;
}

/// |int u v| <= 2 ||u||_q ||v||_{q'}
inline CheckResult holder_pairing_check(const Mesh& mesh, std::span<const double> u, std::span<const double> v,
                                        const ScalarExponent& q, const CellMask& region) {
  std::vector<double> prod;
  for (int i = 0; i < mesh.size(); ++i) {
    if (region[i]) prod.push_back(u[i] * v[i] * mesh.width());
  }
  const double pairing = std::abs(pairwise_sum(prod));
  const auto qc = conjugate_exponent(q, mesh);
  const double bound = 2.0 * luxemburg_norm(mesh, u, q, region) * luxemburg_norm(mesh, v, qc, region);
  CheckResult r;
  r.name = "holder";
  r.value = pairing;
  r.bound = bound;
  r.slack = bound + 1e-10 - pairing;
  r.passed = r.slack >= 0.0;
  return r;
}

/// min{|O|^{1/g+}, |O|^{1/g-}} <= ||1||_g <= max{...}
inline CheckResult norm_of_one_bounds(const Mesh& mesh, const ScalarExponent& gamma, const CellMask& region) {
  const Grid one(mesh.size(), 1.0);
  const double norm = luxemburg_norm(mesh, one, gamma, region);
  const double m = mesh.measure(region);
  const auto range = exponent_range(mesh, gamma, region);
  const double a = std::pow(m, 1.0 / range.upper);
  const double b = std::pow(m, 1.0 / range.lower);
  const double lo = std::min(a, b), hi = std::max(a, b);
  constexpr double tol = 1e-9;
  CheckResult r;
  r.name = "norm_of_one";
  r.value = norm;
  r.bound = hi;
  r.slack = std::min(norm - lo * (1.0 - tol), hi * (1.0 + tol) - norm) / hi;
  r.passed = r.slack >= 0.0;
  std::ostringstream os;
  os << "measure=" << m << " lower=" << lo << " upper=" << hi;
  r.detail = os.str();
  return r;
}

/// Two-sided bounds of || |u|^beta ||_alpha by powers of ||u||_{alpha beta}.
inline CheckResult power_norm_bounds_check(const Mesh& mesh, std::span<const double> u, const ScalarExponent& alpha,
                                           const ScalarExponent& beta, const CellMask& region) {
  const ScalarExponent ab([alpha, beta](double x) { return alpha(x) * beta(x); }, mesh.centers());
  Grid ub(mesh.size(), 0.0);
  for (int i = 0; i < mesh.size(); ++i) ub[i] = std::pow(std::abs(u[i]), beta(mesh.center(i)));
  const double n_ab = luxemburg_norm(mesh, u, ab, region);
  const double mid = luxemburg_norm(mesh, ub, alpha, region);
  const auto br = exponent_range(mesh, beta, region);
  double lo, hi;
  if (n_ab <= 1.0) {
    lo = std::pow(n_ab, br.upper);
    hi = std::pow(n_ab, br.lower);
  } else {
    lo = std::pow(n_ab, br.lower);
    hi = std::pow(n_ab, br.upper);
  }
  constexpr double tol = 1e-9;
  CheckResult r;
  r.name = "power_norm";
  r.value = mid;
  r.bound = hi;
  r.slack = hi > 0.0 ? std::min(mid - lo * (1.0 - tol), hi * (1.0 + tol) - mid) / hi : 0.0;
  r.passed = mid >= lo * (1.0 - tol) && mid <= hi * (1.0 + tol);
  std::ostringstream os;
  os << "norm_ab=" << n_ab << " lower=" << lo << " upper=" << hi;
  r.detail = os.str();
  return r;
}

/// Norm/modular relations plus the unit-ball certificate modular(u/||u||) = 1.
inline CheckResult norm_modular_relation_check(const Mesh& mesh, std::span<const double> u, const ScalarExponent& q,
                                               const CellMask& region) {
  constexpr double tol = 1e-9;
  constexpr double unit_tol = 1e-8;
  const double norm = luxemburg_norm(mesh, u, q, region);
  const double rho = modular(mesh, u, q, region);
  const auto range = exponent_range(mesh, q, region);
  CheckResult r;
  r.name = "norm_modular";
  r.value = rho;
  bool ok = true;
  double slack = std::numeric_limits<double>::infinity();
  std::ostringstream os;
  os << "norm=" << norm << " modular=" << rho;

  if ((norm < 1.0 - tol && rho >= 1.0 + tol) || (norm > 1.0 + tol && rho <= 1.0 - tol)) {
    ok = false;
    os << " [unit-ball equivalence violated]";
  }
  if (norm > 1.0) {
    const double lo = std::pow(norm, range.lower), hi = std::pow(norm, range.upper);
    if (rho < lo * (1.0 - tol) || rho > hi * (1.0 + tol)) ok = false;
    slack = std::min({slack, (rho - lo * (1.0 - tol)) / hi, (hi * (1.0 + tol) - rho) / hi});
    r.bound = hi;
  } else if (norm < 1.0 && norm > 0.0) {
    const double lo = std::pow(norm, range.upper), hi = std::pow(norm, range.lower);
    if (rho < lo * (1.0 - tol) || rho > hi * (1.0 + tol)) ok = false;
    slack = std::min({slack, (rho - lo * (1.0 - tol)) / hi, (hi * (1.0 + tol) - rho) / hi});
    r.bound = hi;
  }
  if (norm > 0.0) {
    Grid scaled(u.begin(), u.end());
    for (auto& x : scaled) x /= norm;
    const double unit = modular(mesh, scaled, q, region);
    if (std::abs(unit - 1.0) > unit_tol) {
      ok = false;
      os << " [unit certificate " << unit << "]";
    }
    slack = std::min(slack, unit_tol - std::abs(unit - 1.0));
  }
  r.slack = std::isfinite(slack) ? slack : 0.0;
  r.passed = ok;
  r.detail = os.str();
  return r;
}

}  // namespace fracpx
