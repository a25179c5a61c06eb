#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "fracpx/error.hpp"
#include "fracpx/numeric.hpp"

namespace fracpx {

/// Open interval (lo, hi).
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return lo < x && x < hi; }
};

/// Uniform partition of the truncated box [-R, R] with a mask for Omega.
class Mesh {
 public:
  Mesh(double radius, int n_cells, std::vector<Interval> omega)
      : radius_(radius), n_(n_cells), omega_(std::move(omega)) {
    width_ = 2.0 * radius_ / n_;
    centers_.resize(n_);
    interior_.assign(n_, 0);
    for (int i = 0; i < n_; ++i) {
      centers_[i] = -radius_ + (i + 0.5) * width_;
      for (const auto& iv : omega_) {
        if (iv.contains(centers_[i])) interior_[i] = 1;
      }
      if (interior_[i]) interior_indices_.push_back(i);
    }
  }

  double radius() const { return radius_; }
  int size() const { return n_; }
  double width() const { return width_; }
  double center(int i) const { return centers_[i]; }
  const std::vector<double>& centers() const { return centers_; }
  bool interior(int i) const { return interior_[i] != 0; }
  const CellMask& interior_mask() const { return interior_; }
  const std::vector<int>& interior_indices() const { return interior_indices_; }
  const std::vector<Interval>& omega() const { return omega_; }

  CellMask exterior_mask() const {
    CellMask m(n_);
    for (int i = 0; i < n_; ++i) m[i] = interior_[i] ? 0 : 1;
    return m;
  }

  /// Measure of a cell set (midpoint convention: cells count whole).
  double measure(const CellMask& region) const { return static_cast<double>(count(region)) * width_; }
  double omega_measure() const { return measure(interior_); }

 private:
  double radius_;
  int n_;
  double width_ = 0.0;
  std::vector<Interval> omega_;
  std::vector<double> centers_;
  CellMask interior_;
  std::vector<int> interior_indices_;
};

inline Mesh build_mesh(double radius, int n_cells, std::vector<Interval> omega) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(Errc::invalid_argument, "mesh.R must be positive and finite");
  }
  if (n_cells < 4) throw Error(Errc::invalid_argument, "mesh.n_cells must be at least 4");
  if (omega.empty()) throw Error(Errc::invalid_argument, "omega must contain at least one interval");
  for (const auto& iv : omega) {
    if (!(iv.lo < iv.hi)) {
      std::ostringstream os;
      os << "omega interval (" << iv.lo << ", " << iv.hi << ") is empty";
      throw Error(Errc::invalid_argument, os.str());
    }
    if (iv.lo <= -radius || iv.hi >= radius) {
      std::ostringstream os;
      os << "omega interval (" << iv.lo << ", " << iv.hi << ") reaches the box boundary +-" << radius
         << "; the exterior collar would be empty";
      throw Error(Errc::no_exterior_collar, os.str());
    }
  }
  Mesh mesh(radius, n_cells, std::move(omega));
  const auto n_int = mesh.interior_indices().size();
  if (n_int == 0) throw Error(Errc::invalid_argument, "omega contains no cell center; refine the mesh");
  if (n_int == static_cast<std::size_t>(n_cells)) {
    throw Error(Errc::no_exterior_collar, "every cell center lies in omega; no exterior cells");
  }
  return mesh;
}

}  // namespace fracpx
