#include "chemred/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "chemred/csv.hpp"

namespace chemred {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

TraitGrid grid_from_nodes(const std::vector<double>& nodes, const std::string& what) {
  require(nodes.size() >= 3, what + ": need at least 3 nodes");
  auto grid = TraitGrid::uniform(nodes.front(), nodes.back(), nodes.size());
  const double tol = 1e-9 * grid.spacing();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    require(std::abs(nodes[i] - grid.node(i)) <= tol,
            what + ": nodes are not uniformly spaced (node " + std::to_string(i) + ")");
  }
  return grid;
}

}  // namespace

void Coefficients::validate() const {
  const auto nx = static_cast<Eigen::Index>(grid_x.size());
  const auto ny = static_cast<Eigen::Index>(grid_y.size());
  require(growth.size() == nx, "growth a(x) must have one value per x node");
  require(renewal.size() == ny, "renewal m(y) must have one value per y node");
  require(supply.size() == ny, "supply R_in(y) must have one value per y node");
  require(uptake.rows() == nx && uptake.cols() == ny, "uptake K must be an (x nodes) x (y nodes) matrix");
  require(all_finite(growth) && all_finite(renewal) && all_finite(supply) && all_finite(uptake),
          "coefficients must be finite");
  require(uptake.minCoeff() >= 0.0, "uptake K(x,y) must be nonnegative");
  require(renewal.minCoeff() > 0.0, "renewal m(y) must be positive");
  require(supply.minCoeff() > 0.0, "supply R_in(y) must be positive");
  require(birth.has_value() == slow_death.has_value(), "birth and slow_death must be given together");
  if (birth) {
    require(birth->size() == nx && slow_death->size() == nx, "birth/slow_death must match the x grid");
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double expect = (*birth)[i] - (*slow_death)[i];
      require(std::abs(growth[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)),
              "growth must equal birth - slow_death (node " + std::to_string(i) + ")");
    }
  }
}

Coefficients make_coefficients(TraitGrid grid_x, TraitGrid grid_y, Vector growth, Vector renewal,
                               Vector supply, Matrix uptake, std::optional<Vector> birth,
                               std::optional<Vector> slow_death) {
  Coefficients c{std::move(grid_x), std::move(grid_y), std::move(growth), std::move(renewal),
                 std::move(supply), std::move(uptake), std::move(birth), std::move(slow_death)};
  c.validate();
  return c;
}

Coefficients build_gaussian_coefficients(const NormalizedGaussian& spec, double m_const,
                                         const TraitGrid& grid_x, const TraitGrid& grid_y) {
  require(spec.sigma_K > 0.0 && std::isfinite(spec.sigma_K), "sigma_K must be positive");
  require(spec.sigma_in > 0.0 && std::isfinite(spec.sigma_in), "sigma_in must be positive");
  require(spec.M_in > 0.0 && std::isfinite(spec.M_in), "M_in must be positive");
  require(m_const > 0.0 && std::isfinite(m_const), "m must be positive");

  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  const auto& x = grid_x.nodes();
  const auto& y = grid_y.nodes();
  Matrix K(x.size(), y.size());
  const double k_norm = 1.0 / (spec.sigma_K * root2pi);
  const double k_scale = 1.0 / (2.0 * spec.sigma_K * spec.sigma_K);
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[j];
      K(i, j) = k_norm * std::exp(-d * d * k_scale);
    }
  }
  Vector supply(y.size());
  const double in_norm = spec.M_in / (spec.sigma_in * root2pi);
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    supply[j] = in_norm * std::exp(-y[j] * y[j] / (2.0 * spec.sigma_in * spec.sigma_in));
  }
  Vector growth = (1.0 - x.array().square()).matrix();
  return make_coefficients(grid_x, grid_y, std::move(growth), Vector::Constant(y.size(), m_const),
                           std::move(supply), std::move(K));
}

Coefficients build_gaussian_coefficients(const UnnormalizedGaussian& spec, const TraitGrid& grid_x,
                                         const TraitGrid& grid_y) {
  require(spec.alpha > 0.0 && std::isfinite(spec.alpha), "alpha must be positive");
  require(spec.beta >= 0.0 && std::isfinite(spec.beta), "beta must be nonnegative");
  const auto& x = grid_x.nodes();
  const auto& y = grid_y.nodes();
  Matrix K(x.size(), y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[j];
      K(i, j) = std::exp(-spec.alpha * d * d);
    }
  }
  Vector supply = (-spec.beta * y.array().square()).exp().matrix();
  Vector growth = (1.0 - x.array().square()).matrix();
  return make_coefficients(grid_x, grid_y, std::move(growth), Vector::Ones(y.size()),
                           std::move(supply), std::move(K));
}

Coefficients from_unscaled(const TraitGrid& grid_x, const TraitGrid& grid_y, const Vector& birth,
                           const Vector& death, const Matrix& uptake, const Vector& renewal,
                           const Vector& supply) {
  require(birth.size() == static_cast<Eigen::Index>(grid_x.size()) && death.size() == birth.size(),
          "birth and death must match the x grid");
  require(uptake.cols() == static_cast<Eigen::Index>(grid_y.size()) &&
              supply.size() == uptake.cols(),
          "uptake and supply must match the y grid");
  const Vector fast_death = uptake * grid_y.weights().cwiseProduct(supply);
  Vector slow_death = death - fast_death;
  Vector growth = birth - slow_death;
  return make_coefficients(grid_x, grid_y, std::move(growth), renewal, supply, uptake, birth,
                           std::move(slow_death));
}

UnscaledCoefficients to_unscaled(const Coefficients& scaled, double epsilon) {
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
  UnscaledCoefficients u;
  u.birth = scaled.birth ? *scaled.birth : scaled.growth;
  const Vector slow = scaled.slow_death ? *scaled.slow_death : Vector::Zero(scaled.growth.size());
  u.uptake = scaled.uptake / epsilon;
  u.renewal = scaled.renewal / (epsilon * epsilon);
  u.supply = scaled.supply;
  u.death = u.uptake * scaled.grid_y.weights().cwiseProduct(scaled.supply) + slow;
  return u;
}

Coefficients load_coefficients_csv(const std::filesystem::path& growth_file,
                                   const std::filesystem::path& resource_file,
                                   const std::filesystem::path& uptake_file) {
  const auto gt = csv::read(growth_file);
  const auto rt = csv::read(resource_file);
  const auto kt = csv::read(uptake_file);

  const std::size_t cx = gt.column("x");
  const std::size_t ca = gt.column("a");
  std::optional<std::size_t> cb, cd;
  for (std::size_t i = 0; i < gt.header.size(); ++i) {
    if (gt.header[i] == "b") cb = i;
    if (gt.header[i] == "d_slow") cd = i;
  }
  require(cb.has_value() == cd.has_value(), growth_file.string() + ": columns b and d_slow must appear together");

  std::vector<double> xs;
  Vector growth(static_cast<Eigen::Index>(gt.rows.size()));
  std::optional<Vector> birth, slow;
  if (cb) {
    birth = Vector(growth.size());
    slow = Vector(growth.size());
  }
  for (std::size_t r = 0; r < gt.rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    xs.push_back(csv::parse(gt.rows[r][cx]));
    growth[i] = csv::parse(gt.rows[r][ca]);
    if (cb) {
      (*birth)[i] = csv::parse(gt.rows[r][*cb]);
      (*slow)[i] = csv::parse(gt.rows[r][*cd]);
    }
  }

  const std::size_t cy = rt.column("y");
  const std::size_t cm = rt.column("m");
  const std::size_t cr = rt.column("R_in");
  std::vector<double> ys;
  Vector renewal(static_cast<Eigen::Index>(rt.rows.size()));
  Vector supply(renewal.size());
  for (std::size_t r = 0; r < rt.rows.size(); ++r) {
    ys.push_back(csv::parse(rt.rows[r][cy]));
    renewal[static_cast<Eigen::Index>(r)] = csv::parse(rt.rows[r][cm]);
    supply[static_cast<Eigen::Index>(r)] = csv::parse(rt.rows[r][cr]);
  }

  auto gx = grid_from_nodes(xs, growth_file.string());
  auto gy = grid_from_nodes(ys, resource_file.string());

  require(kt.header.size() == ys.size() + 1,
          uptake_file.string() + ": header must hold one label cell plus one cell per y node");
  require(kt.rows.size() == xs.size(), uptake_file.string() + ": need one row per x node");
  const double tol_y = 1e-9 * gy.spacing();
  for (std::size_t j = 0; j < ys.size(); ++j) {
    require(std::abs(csv::parse(kt.header[j + 1]) - ys[j]) <= tol_y,
            uptake_file.string() + ": header y node " + std::to_string(j) + " does not match resource file");
  }
  Matrix K(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  const double tol_x = 1e-9 * gx.spacing();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(std::abs(csv::parse(kt.rows[i][0]) - xs[i]) <= tol_x,
            uptake_file.string() + ": row " + std::to_string(i) + " x node does not match growth file");
    for (std::size_t j = 0; j < ys.size(); ++j) {
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv::parse(kt.rows[i][j + 1]);
    }
  }
  return make_coefficients(std::move(gx), std::move(gy), std::move(growth), std::move(renewal),
                           std::move(supply), std::move(K), std::move(birth), std::move(slow));
}

ReducedKernel::ReducedKernel(TraitGrid grid_x, Matrix c) : grid_(std::move(grid_x)), c_(std::move(c)) {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  require(c_.rows() == n && c_.cols() == n, "reduced kernel must be square over the x grid");
}

Vector ReducedKernel::apply(const Vector& n) const {
  require(n.size() == c_.cols(), "reduced kernel: density length mismatch");
  return c_ * grid_.weights().cwiseProduct(n);
}

ReducedKernel reduce_kernel(const Coefficients& coeffs) {
  require(coeffs.uptake.rows() == static_cast<Eigen::Index>(coeffs.grid_x.size()) &&
              coeffs.uptake.cols() == static_cast<Eigen::Index>(coeffs.grid_y.size()),
          "reduce_kernel: uptake matrix does not match the grids");
  const Matrix& K = coeffs.uptake;
  const Vector weight =
      coeffs.grid_y.weights().cwiseProduct(coeffs.supply.cwiseQuotient(coeffs.renewal));
  const Eigen::Index nx = K.rows();
  const Eigen::Index ny = K.cols();
  // Row-major access to K(i, :) through the transpose keeps the inner loop
  // contiguous.
  const Matrix Kt = K.transpose();
  Matrix c(nx, nx);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Vector wi = Kt.col(i).cwiseProduct(weight);
    for (Eigen::Index j = i; j < nx; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < ny; ++k) s += wi[k] * Kt(k, j);
      c(i, j) = s;
      c(j, i) = s;
    }
  }
  return ReducedKernel(coeffs.grid_x, std::move(c));
}

GaussianReducedKernel::GaussianReducedKernel(double alpha, double beta)
    : alpha_(alpha), beta_(beta), gamma_(0.0) {
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  require(beta >= 0.0 && std::isfinite(beta), "beta must be nonnegative");
  gamma_ = alpha * alpha / (2.0 * alpha + beta);
}

double GaussianReducedKernel::operator()(double x, double xp) const {
  const double s = x + xp;
  const double exponent = alpha_ * x * x + alpha_ * xp * xp - gamma_ * s * s;
  return std::exp(-exponent) * std::sqrt(std::numbers::pi / (2.0 * alpha_ + beta_));
}

double GaussianReducedKernel::truncated(double x, double xp, double lo, double hi) const {
  const double A = 2.0 * alpha_ + beta_;
  const double s = x + xp;
  const double center = alpha_ * s / A;
  const double ra = std::sqrt(A);
  const double exponent = alpha_ * x * x + alpha_ * xp * xp - gamma_ * s * s;
  const double mass = 0.5 * std::sqrt(std::numbers::pi / A) *
                      (std::erf(ra * (hi - center)) - std::erf(ra * (lo - center)));
  return std::exp(-exponent) * mass;
}

GaussianReducedKernel closed_form_reduced(double alpha, double beta) {
  return GaussianReducedKernel(alpha, beta);
}

double translation_invariance_defect(const ReducedKernel& rk) {
  const Matrix& c = rk.matrix();
  const Eigen::Index n = c.rows();
  const double scale = c.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  // On a uniform grid equal x - x' means equal index offset, i.e. one diagonal.
  for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
    const auto diag = c.diagonal(d);
    worst = std::max(worst, diag.maxCoeff() - diag.minCoeff());
  }
  return worst / scale;
}

}  // namespace chemred
