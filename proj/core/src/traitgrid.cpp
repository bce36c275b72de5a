#include "chemred/traitgrid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemred {

namespace {

void require_length(const Vector& values, const TraitGrid& grid, const char* what) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw std::invalid_argument(std::string(what) + ": vector has length " +
                                std::to_string(values.size()) + ", grid has " +
                                std::to_string(grid.size()) + " nodes");
  }
}

}  // namespace

TraitGrid TraitGrid::uniform(double x_min, double x_max, std::size_t n_points) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw std::invalid_argument("grid bounds must be finite");
  }
  if (!(x_max > x_min)) {
    throw std::invalid_argument("grid requires x_max > x_min");
  }
  if (n_points < 3) {
    throw std::invalid_argument("grid requires at least 3 points, got " + std::to_string(n_points));
  }
  TraitGrid g;
  g.x_min_ = x_min;
  g.x_max_ = x_max;
  const auto n = static_cast<Eigen::Index>(n_points);
  g.spacing_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  g.nodes_.resize(n);
  g.weights_.setConstant(n, g.spacing_);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.nodes_[i] = x_min + static_cast<double>(i) * g.spacing_;
  }
  g.nodes_[n - 1] = x_max;
  g.weights_[0] = 0.5 * g.spacing_;
  g.weights_[n - 1] = 0.5 * g.spacing_;
  return g;
}

TraitGrid TraitGrid::single_point(double x, double weight) {
  if (!std::isfinite(x) || !(weight > 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("single-point grid needs a finite node and positive weight");
  }
  TraitGrid g;
  g.x_min_ = x;
  g.x_max_ = x;
  g.spacing_ = 0.0;
  g.nodes_ = Vector::Constant(1, x);
  g.weights_ = Vector::Constant(1, weight);
  return g;
}

std::size_t TraitGrid::nearest(double x) const {
  if (size() == 1 || spacing_ == 0.0) return 0;
  const double s = std::round((x - x_min_) / spacing_);
  if (s <= 0.0) return 0;
  if (s >= static_cast<double>(size() - 1)) return size() - 1;
  auto i = static_cast<std::size_t>(s);
  // round() resolves exact halves away from zero; prefer the lower node.
  if (i > 0 && std::abs(node(i - 1) - x) <= std::abs(node(i) - x)) --i;
  return i;
}

bool TraitGrid::same_as(const TraitGrid& other) const noexcept {
  return size() == other.size() && x_min_ == other.x_min_ && x_max_ == other.x_max_ &&
         weights_ == other.weights_;
}

double integrate(const Vector& values, const TraitGrid& grid) {
  require_length(values, grid, "integrate");
  return grid.weights().dot(values);
}

Vector laplacian(const Vector& values, const TraitGrid& grid) {
  require_length(values, grid, "laplacian");
  const Eigen::Index n = values.size();
  Vector out = Vector::Zero(n);
  if (n < 3) return out;
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  out[0] = 2.0 * (values[1] - values[0]) * inv_h2;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    out[i] = (values[i - 1] - 2.0 * values[i] + values[i + 1]) * inv_h2;
  }
  out[n - 1] = 2.0 * (values[n - 2] - values[n - 1]) * inv_h2;
  return out;
}

void solve_implicit_diffusion(const TraitGrid& grid, double coef, Vector& values) {
  require_length(values, grid, "solve_implicit_diffusion");
  if (coef < 0.0 || !std::isfinite(coef)) {
    throw std::invalid_argument("diffusion coefficient must be finite and nonnegative");
  }
  const Eigen::Index n = values.size();
  if (coef == 0.0 || n < 3) return;
  const double r = coef / (grid.spacing() * grid.spacing());

  // Thomas algorithm. Row 0 and row n-1 carry the doubled off-diagonal of the
  // mirrored ghost node.
  std::vector<double> upper(static_cast<std::size_t>(n));
  const double diag = 1.0 + 2.0 * r;
  double denom = diag;
  upper[0] = -2.0 * r / denom;
  values[0] /= denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double lower = (i == n - 1) ? -2.0 * r : -r;
    denom = diag - lower * upper[static_cast<std::size_t>(i - 1)];
    upper[static_cast<std::size_t>(i)] = (i == n - 1) ? 0.0 : -r / denom;
    values[i] = (values[i] - lower * values[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    values[i] -= upper[static_cast<std::size_t>(i)] * values[i + 1];
  }
}

}  // namespace chemred
