#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace chemred {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Uniform discretization of a trait interval.
 *
 * Carries the nodes together with trapezoidal quadrature weights, so every
 * integral over a trait variable reduces to a weighted sum. Grids built by
 * uniform() have at least three nodes; single_point() produces a degenerate
 * one-node grid used to reduce the models to scalar ODE systems.
 */
class TraitGrid {
 public:
  /// Trapezoidal grid on [x_min, x_max]; throws std::invalid_argument for
  /// non-finite bounds, x_max <= x_min or n_points < 3.
  static TraitGrid uniform(double x_min, double x_max, std::size_t n_points);

  /// One node at `x` carrying quadrature weight `weight`.
  static TraitGrid single_point(double x, double weight = 1.0);

  std::size_t size() const noexcept { return static_cast<std::size_t>(nodes_.size()); }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  /// Node spacing h; zero for a single-point grid.
  double spacing() const noexcept { return spacing_; }
  const Vector& nodes() const noexcept { return nodes_; }
  const Vector& weights() const noexcept { return weights_; }
  double node(std::size_t i) const { return nodes_[static_cast<Eigen::Index>(i)]; }

  /// Index of the node closest to x (ties resolve to the lower index).
  std::size_t nearest(double x) const;

  bool same_as(const TraitGrid& other) const noexcept;

 private:
  TraitGrid() = default;

  double x_min_ = 0.0;
  double x_max_ = 0.0;
  double spacing_ = 0.0;
  Vector nodes_;
  Vector weights_;
};

/// Quadrature sum of `values` over the grid.
double integrate(const Vector& values, const TraitGrid& grid);

/// Second-order Laplacian with reflecting (no-flux) closure: the ghost node
/// beyond each end mirrors its interior neighbour.
Vector laplacian(const Vector& values, const TraitGrid& grid);

/// Overwrites `values` with the solution u of (I - coef * laplacian) u = values.
/// coef >= 0. The system is a diagonally dominant M-matrix, so positivity and
/// the discrete mass are preserved.
void solve_implicit_diffusion(const TraitGrid& grid, double coef, Vector& values);

}  // namespace chemred
