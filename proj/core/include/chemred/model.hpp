#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "chemred/traitgrid.hpp"

namespace chemred {

/**
 * Tabulated coefficients of the scaled chemostat.
 *
 * `growth` is a(x) over grid_x, `renewal` is m(y) and `supply` is R_in(y) over
 * grid_y, and `uptake` is K(x, y) with rows indexed by x and columns by y.
 * When the coefficients come from the unscaled model the split
 * a = birth - slow_death is kept alongside.
 *
 * Construct through make_coefficients() or one of the builders so the
 * invariants (K >= 0 and finite, m > 0, R_in > 0) are checked once.
 */
struct Coefficients {
  TraitGrid grid_x;
  TraitGrid grid_y;
  Vector growth;
  Vector renewal;
  Vector supply;
  Matrix uptake;
  std::optional<Vector> birth;
  std::optional<Vector> slow_death;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  double uptake_sup() const { return uptake.maxCoeff(); }      // K_M
  double growth_sup() const { return growth.cwiseAbs().maxCoeff(); }  // a_M
  double renewal_min() const { return renewal.minCoeff(); }
  double renewal_max() const { return renewal.maxCoeff(); }
};

Coefficients make_coefficients(TraitGrid grid_x, TraitGrid grid_y, Vector growth, Vector renewal,
                               Vector supply, Matrix uptake,
                               std::optional<Vector> birth = std::nullopt,
                               std::optional<Vector> slow_death = std::nullopt);

/// Mass-normalized Gaussian uptake and supply with a constant renewal rate:
///   K(x,y) = exp(-(x-y)^2 / (2 sigma_K^2)) / (sigma_K sqrt(2 pi))
///   R_in(y) = M_in exp(-y^2 / (2 sigma_in^2)) / (sigma_in sqrt(2 pi))
struct NormalizedGaussian {
  double sigma_K = 0.5;
  double sigma_in = 0.5;
  double M_in = 1.0;
};

/// Unnormalized form K = exp(-alpha (x-y)^2), R_in = exp(-beta y^2), m = 1.
struct UnnormalizedGaussian {
  double alpha = 1.0;
  double beta = 1.0;
};

using GaussianSpec = std::variant<NormalizedGaussian, UnnormalizedGaussian>;

/// Normalized Gaussian coefficients with a(x) = 1 - x^2 and m = m_const.
Coefficients build_gaussian_coefficients(const NormalizedGaussian& spec, double m_const,
                                         const TraitGrid& grid_x, const TraitGrid& grid_y);

/// Unnormalized Gaussian coefficients, a(x) = 1 - x^2 and m = 1.
Coefficients build_gaussian_coefficients(const UnnormalizedGaussian& spec,
                                         const TraitGrid& grid_x, const TraitGrid& grid_y);

/// Coefficients of the unscaled model
///   n_t = n [b - d + int K R dy],  R_t = m (R_in - R) - R int K n dx
/// rewritten in the scaled form with epsilon = 1: the fast death share
/// int K R_in dy is split off so that d_slow = d - int K R_in dy and
/// a = b - d_slow.
Coefficients from_unscaled(const TraitGrid& grid_x, const TraitGrid& grid_y, const Vector& birth,
                           const Vector& death, const Matrix& uptake, const Vector& renewal,
                           const Vector& supply);

/// Unscaled coefficients equivalent to `scaled` at uptake scale epsilon:
/// m -> m / eps^2, K -> K / eps, d = (1/eps) int K R_in dy + d_slow.
/// Birth defaults to a and slow death to zero when the split is absent.
struct UnscaledCoefficients {
  Vector birth;
  Vector death;
  Matrix uptake;
  Vector renewal;
  Vector supply;
};
UnscaledCoefficients to_unscaled(const Coefficients& scaled, double epsilon);

/// Loads coefficients from CSV tables:
///   growth file columns x,a (optional b,d_slow),
///   resource file columns y,m,R_in,
///   uptake file: header cell then y nodes; each row an x node then K values.
/// Node columns must describe uniform grids.
Coefficients load_coefficients_csv(const std::filesystem::path& growth_file,
                                   const std::filesystem::path& resource_file,
                                   const std::filesystem::path& uptake_file);

/// Direct competition kernel c(x, x') over grid_x. Immutable once built.
class ReducedKernel {
 public:
  ReducedKernel(TraitGrid grid_x, Matrix c);

  const TraitGrid& grid() const noexcept { return grid_; }
  const Matrix& matrix() const noexcept { return c_; }
  double operator()(std::size_t i, std::size_t j) const {
    return c_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  /// (c * n)(x) = int c(x, x') n(x') dx'
  Vector apply(const Vector& n) const;

 private:
  TraitGrid grid_;
  Matrix c_;
};

/// c(x_i, x_j) = sum_k w_k K(x_i, y_k) (R_in / m)(y_k) K(x_j, y_k).
/// The upper triangle is computed and mirrored, so the result is exactly
/// symmetric.
ReducedKernel reduce_kernel(const Coefficients& coeffs);

/// Closed form of the reduced kernel for the unnormalized Gaussian data:
///   c(x, x') = exp(-[alpha x^2 + alpha x'^2 - gamma (x + x')^2]) sqrt(pi / (2 alpha + beta))
/// with gamma = alpha^2 / (2 alpha + beta).
class GaussianReducedKernel {
 public:
  GaussianReducedKernel(double alpha, double beta);
  double operator()(double x, double xp) const;
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return gamma_; }

  /// Same integral restricted to y in [lo, hi] (erf form). Lets refinement
  /// studies on truncated domains compare against an exact target.
  double truncated(double x, double xp, double lo, double hi) const;

 private:
  double alpha_;
  double beta_;
  double gamma_;
};

GaussianReducedKernel closed_form_reduced(double alpha, double beta);

/// max over node pairs sharing the same x - x' of |c1 - c2| / max|c|.
/// Zero when c depends on x - x' only. Requires a uniform grid.
double translation_invariance_defect(const ReducedKernel& rk);

}  // namespace chemred
