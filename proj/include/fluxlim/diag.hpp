#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "fluxlim/grid.hpp"

namespace fluxlim {

/// Sum of cell values times cell volume; works on any dense expression.
template <typename Derived>
double total_mass(const Eigen::DenseBase<Derived>& field, const SpatialGrid& grid) {
  return field.sum() * grid.cell_volume();
}

/// Sum of |c_{i+1} - c_i| of a 1D field.
template <typename Derived>
double total_variation(const Eigen::DenseBase<Derived>& field) {
  double tv = 0.0;
  for (Eigen::Index i = 0; i + 1 < field.size(); ++i)
    tv += std::abs(field(i + 1) - field(i));
  return tv;
}

/// Outermost cell centers where c exceeds the absolute threshold.
/// Empty when everything is below it ("no front").
struct FrontInterval {
  double left = 0.0;
  double right = 0.0;
};

std::optional<FrontInterval> front_position(const Eigen::ArrayXd& field,
                                            const SpatialGrid& grid,
                                            double threshold_abs);

/// Time series of front positions with local steepness max|dc|/dx.
struct FrontSeries {
  std::vector<double> times;
  std::vector<double> left;
  std::vector<double> right;
  std::vector<double> steepness;

  void append(double t, const FrontInterval& f, double steep) {
    if (!times.empty() && t <= times.back())
      throw std::invalid_argument("FrontSeries: times must be strictly increasing");
    times.push_back(t);
    left.push_back(f.left);
    right.push_back(f.right);
    steepness.push_back(steep);
  }
  std::size_t size() const { return times.size(); }
};

/// Least-squares slope of the right-front position over the trailing window
/// (fraction of samples, transient excluded).  Needs >= 5 samples in window.
double front_speed(const FrontSeries& series, double window_fraction = 0.8);

/// Same fit for the left front (sign carries the direction).
double front_speed_left(const FrontSeries& series, double window_fraction = 0.8);

/// max |c_{i+1}-c_i|/dx within a few cells of each front edge.
double front_steepness(const Eigen::ArrayXd& field, const SpatialGrid& grid,
                       double threshold_abs, int halo = 4);

}  // namespace fluxlim
