#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "fracpx/error.hpp"
#include "fracpx/mesh.hpp"

namespace fracpx {

/// A variable exponent x -> q(x) together with its sampled bounds.
class ScalarExponent {
 public:
  using Evaluator = std::function<double(double)>;

  ScalarExponent() = default;

  /// Bounds are taken over `samples`.
  ScalarExponent(Evaluator f, std::span<const double> samples) : f_(std::move(f)) {
    lower_ = std::numeric_limits<double>::infinity();
    upper_ = -std::numeric_limits<double>::infinity();
    for (double x : samples) {
      const double v = f_(x);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "exponent is not finite at x = " << x;
        throw Error(Errc::non_finite, os.str());
      }
      lower_ = std::min(lower_, v);
      upper_ = std::max(upper_, v);
    }
  }

  double operator()(double x) const { return f_(x); }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const Evaluator& evaluator() const { return f_; }

  /// Values at the cell centers of `mesh`.
  std::vector<double> sample(const Mesh& mesh) const {
    std::vector<double> v(mesh.size());
    for (int i = 0; i < mesh.size(); ++i) v[i] = f_(mesh.center(i));
    return v;
  }

  bool valid() const { return 1.0 < lower_ && upper_ < std::numeric_limits<double>::infinity(); }

 private:
  Evaluator f_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

/// Symmetric two-point exponent p(x, y) with fractional order s, bound to the
/// cell centers of a mesh. Arguments outside the box are frozen at the box
/// boundary.
class ExponentField {
 public:
  using Evaluator = std::function<double(double, double)>;

  ExponentField() = default;

  ExponentField(Evaluator f, double s, const Mesh& mesh, int dimension = 1)
      : f_(std::move(f)), s_(s), dimension_(dimension), radius_(mesh.radius()), centers_(mesh.centers()) {
    if (!(s > 0.0 && s < 1.0)) throw Error(Errc::invalid_argument, "fractional order s must lie in (0, 1)");
    if (dimension != 1) throw Error(Errc::invalid_argument, "only dimension N = 1 is supported");
    p_minus_ = std::numeric_limits<double>::infinity();
    p_plus_ = -std::numeric_limits<double>::infinity();
    for (double x : centers_) {
      for (double y : centers_) {
        const double v = f_(x, y);
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "exponent p(" << x << ", " << y << ") is not finite";
          throw Error(Errc::non_finite, os.str());
        }
        p_minus_ = std::min(p_minus_, v);
        p_plus_ = std::max(p_plus_, v);
      }
    }
  }

  double operator()(double x, double y) const { return f_(clamp(x), clamp(y)); }
  /// p(x, x)
  double trace(double x) const { return (*this)(x, x); }

  double order() const { return s_; }
  int dimension() const { return dimension_; }
  double p_minus() const { return p_minus_; }
  double p_plus() const { return p_plus_; }
  const std::vector<double>& sample_points() const { return centers_; }
  const Evaluator& evaluator() const { return f_; }

 private:
  double clamp(double x) const { return std::clamp(x, -radius_, radius_); }

  Evaluator f_;
  double s_ = 0.5;
  int dimension_ = 1;
  double radius_ = 1.0;
  std::vector<double> centers_;
  double p_minus_ = 0.0;
  double p_plus_ = 0.0;
};

struct ValidationReport {
  double symmetry_defect = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double s = 0.0;
  int dimension = 1;
  bool symmetric = false;
  bool lower_bound = false;  // 1 < p-
  bool subcritical = false;  // s p+ < N

  bool passed() const { return symmetric && lower_bound && subcritical; }
};

inline ValidationReport validate_exponent_field(const ExponentField& p, const Mesh& mesh) {
  if (mesh.size() == 0) throw Error(Errc::invalid_argument, "mesh is empty");
  ValidationReport r;
  r.s = p.order();
  r.dimension = p.dimension();
  r.p_minus = std::numeric_limits<double>::infinity();
  r.p_plus = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.size(); ++i) {
    for (int j = 0; j < mesh.size(); ++j) {
      const double xy = p(mesh.center(i), mesh.center(j));
      const double yx = p(mesh.center(j), mesh.center(i));
      if (!std::isfinite(xy) || !std::isfinite(yx)) {
        throw Error(Errc::non_finite, "exponent evaluator returned a non-finite value");
      }
      r.symmetry_defect = std::max(r.symmetry_defect, std::abs(xy - yx));
      r.p_minus = std::min(r.p_minus, xy);
      r.p_plus = std::max(r.p_plus, xy);
    }
  }
  r.symmetric = r.symmetry_defect <= 1e-12;
  r.lower_bound = r.p_minus > 1.0;
  r.subcritical = r.s * r.p_plus < r.dimension;
  return r;
}

/// x -> p(x, x)
inline ScalarExponent trace_exponent(const ExponentField& p) {
  return ScalarExponent([p](double x) { return p.trace(x); }, p.sample_points());
}

/// Fractional Sobolev critical exponent N p(x,x) / (N - s p(x,x)).
inline double critical_exponent(const ExponentField& p, double x) {
  const double pbar = p.trace(x);
  const double n = p.dimension();
  const double denom = n - p.order() * pbar;
  if (denom <= 0.0) {
    std::ostringstream os;
    os << "critical exponent undefined at x = " << x << ": N - s p(x,x) = " << denom;
    throw Error(Errc::degenerate_denominator, os.str());
  }
  return n * pbar / denom;
}

inline double conjugate_value(double q) { return q / (q - 1.0); }

inline ScalarExponent conjugate_exponent(const ScalarExponent& q, std::span<const double> samples) {
  return ScalarExponent([q](double x) { return conjugate_value(q(x)); }, samples);
}

inline ScalarExponent conjugate_exponent(const ScalarExponent& q, const Mesh& mesh) {
  return conjugate_exponent(q, mesh.centers());
}

/// Condition p(x,x) <= sup p(.,.) on the diagonal < inf r <= r(x) < p*_s(x) on interior cells.
inline bool validate_growth_pair(const ScalarExponent& r, const ExponentField& p, const Mesh& mesh) {
  double pbar_plus = -std::numeric_limits<double>::infinity();
  double r_minus = std::numeric_limits<double>::infinity();
  for (int i : mesh.interior_indices()) {
    const double x = mesh.center(i);
    pbar_plus = std::max(pbar_plus, p.trace(x));
    r_minus = std::min(r_minus, r(x));
  }
  if (!(pbar_plus < r_minus)) return false;
  for (int i : mesh.interior_indices()) {
    const double x = mesh.center(i);
    double crit = 0.0;
    try {
      crit = critical_exponent(p, x);
    } catch (const Error&) {
      return false;
    }
    if (!(r(x) < crit)) return false;
  }
  return true;
}

}  // namespace fracpx
