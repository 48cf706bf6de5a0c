#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace fluxlim {

enum class Boundary { NoFlux, Periodic };

/// Uniform cell-centered grid, 1D or 2D.
struct SpatialGrid {
  int dimension = 1;
  double xmin = -4.0, xmax = 4.0;
  double ymin = 0.0, ymax = 0.0;
  int nx = 512, ny = 1;
  Boundary boundary = Boundary::NoFlux;

  double dx() const { return (xmax - xmin) / nx; }
  double dy() const { return dimension == 2 ? (ymax - ymin) / ny : 1.0; }
  double cell_volume() const { return dimension == 2 ? dx() * dy() : dx(); }
  double x_center(int i) const { return xmin + (i + 0.5) * dx(); }
  double y_center(int j) const { return ymin + (j + 0.5) * dy(); }

  Eigen::ArrayXd x_centers() const {
    return Eigen::ArrayXd::LinSpaced(nx, xmin + 0.5 * dx(), xmax - 0.5 * dx());
  }

  void validate() const {
    if (dimension != 1 && dimension != 2)
      throw std::invalid_argument("SpatialGrid: dimension must be 1 or 2");
    if (nx < 8 || (dimension == 2 && ny < 8))
      throw std::invalid_argument("SpatialGrid: at least 8 cells per axis");
    if (xmax <= xmin || (dimension == 2 && ymax <= ymin))
      throw std::invalid_argument("SpatialGrid: empty extent");
  }
};

/// Central-difference gradient of a 1D cell field (one-sided at the ends,
/// periodic wrap when requested).
Eigen::ArrayXd gradient(const Eigen::ArrayXd& f, const SpatialGrid& grid);

}  // namespace fluxlim
