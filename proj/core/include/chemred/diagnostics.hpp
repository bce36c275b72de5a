#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chemred/dynamics.hpp"

namespace chemred {

// ---------------------------------------------------------------------------
// Masses and error norms

/// M = int n dx
double mass(const Vector& n, const TraitGrid& grid);

/// N = int |R - R_in| dy
double resource_gap(const Vector& R, const Coefficients& coeffs);

/// max_y |R - R_in| / R_in
double rel_error_R(const Vector& R, const Vector& supply);

/// int |n1 - n2| dx
double l1_distance(const Vector& n1, const Vector& n2, const TraitGrid& grid);

/// u = mu ln n. Throws for mu <= 0 or a negative entry; entries at or below
/// the density floor are counted in `floored` when it is non-null.
Vector hopf_cole(const Vector& n, double mu, std::size_t* floored = nullptr);

/// Right-hand side of the resource-gap bound along a chemostat run:
///   N(0)/eps exp(-m_min t / eps^2) + (|R_M|_inf / m_min) K_M M_sup
/// where R_M = max(R(0), R_in) pointwise.
double resource_gap_bound(double t, double gap0, const Vector& R0, const Coefficients& coeffs,
                          double epsilon, double mass_sup);

// ---------------------------------------------------------------------------
// Peaks

struct Peaks {
  std::vector<std::size_t> indices;
  std::vector<double> locations;
  std::size_t count() const noexcept { return indices.size(); }
};

/// Strict local maxima of n with height >= rel_threshold * max n. A plateau
/// counts once, at its leftmost node; end nodes count when they exceed their
/// single neighbour.
Peaks peak_count(const Vector& n, const TraitGrid& grid, double rel_threshold);

// ---------------------------------------------------------------------------
// Operator positivity

/// int int c(x, x') v(x) v(x') dx dx'
double quadratic_form(const ReducedKernel& rk, const Vector& v);

/// Extreme eigenvalues of W^{1/2} c W^{1/2}, W the quadrature weights.
struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};
Spectrum weighted_spectrum(const ReducedKernel& rk);

// ---------------------------------------------------------------------------
// Evolutionary stable distributions

/// Grid density n_bar with its support; `resource` holds R_bar for a
/// chemostat candidate.
struct ESDCandidate {
  std::vector<std::size_t> support;
  Vector density;
  std::optional<Vector> resource;

  /// Builds a candidate from a full-length density; the support is every node
  /// above 1e-12 * max density.
  static ESDCandidate from_density(Vector density);
};

struct ESDReport {
  double tolerance = 0.0;
  double max_support_residual = 0.0;
  double max_offsupport_violation = 0.0;
  bool pass = false;
  std::vector<std::size_t> support;
  double spacing = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

/// R_bar = R_in / (1 + (eps / m) int K n_bar dx)
Vector steady_resource(const Vector& density, const Coefficients& coeffs, double epsilon);

/// Fitness a - c * n_bar (direct model).
Vector fitness_direct(const Vector& density, const ReducedKernel& rk, const Coefficients& coeffs);

/// Fitness a + (1/eps) int K (R_bar - R_in) dy with R_bar from steady_resource.
Vector fitness_chemostat(const Vector& density, const Coefficients& coeffs, double epsilon);

/// Solves a(x_i) = sum_j c(x_i, x_j) w_j n_j for the nodes of `support`.
/// Throws InfeasibleSupport for a singular restricted system or a negative
/// solution (message lists the offending nodes).
ESDCandidate esd_solve_on_support(const std::vector<std::size_t>& support, const Coefficients& coeffs,
                                  const ReducedKernel& rk);

/// Chemostat analogue: Newton iteration on the support for
/// a + (1/eps) int K (R_bar - R_in) dy = 0, started from the direct solution.
ESDCandidate esd_solve_chemostat_on_support(const std::vector<std::size_t>& support,
                                            const Coefficients& coeffs, double epsilon);

ESDReport esd_verify(const ESDCandidate& candidate, const Coefficients& coeffs, const ReducedKernel& rk,
                     double tol);

/// Recomputes R_bar from the density, stores nothing, reports fitness
/// residuals for the chemostat definition.
ESDReport esd_verify_chemostat(const ESDCandidate& candidate, const Coefficients& coeffs,
                               const ScaleParams& scales, double tol);

/// Active-set search for a grid ESD. Starts from `seed_support`, drops nodes
/// whose weight turns negative and admits the worst off-support violator
/// until the candidate verifies at `tol` or `max_iterations` is reached.
/// `model` selects the definition. Throws InfeasibleSupport on failure.
ESDCandidate esd_find(const std::vector<std::size_t>& seed_support, const Coefficients& coeffs,
                      const ReducedKernel& rk, ModelKind model, const ScaleParams& scales, double tol,
                      int max_iterations = 200);

// ---------------------------------------------------------------------------
// Lyapunov functionals

/// S_cr = -int n_bar ln n dx - int R_bar ln R dy + int n dx + int R dy.
/// Requires candidate.resource. Throws std::domain_error naming the node when
/// ln is taken of a nonpositive value under a positive weight.
double lyapunov_cr(const State& state, const ESDCandidate& esd, const Coefficients& coeffs);

/// D_cr = -int m R_in / (eps^2 R_bar R) (R_bar - R)^2 dy
///        + int n (a + (1/eps) int K (R_bar - R_in) dy) dx
/// in the reaction clock (mu = 0 time units).
double dissipation_cr(const State& state, const ESDCandidate& esd, const Coefficients& coeffs,
                      const ScaleParams& scales);

/// S_dc = -int n_bar ln n dx + int n dx
double lyapunov_dc(const Vector& n, const ESDCandidate& esd, const TraitGrid& grid);

/// D_dc = -int int c (n - n_bar)(n - n_bar) + int n (a - c * n_bar) dx
double dissipation_dc(const Vector& n, const ESDCandidate& esd, const ReducedKernel& rk,
                      const Coefficients& coeffs);

/// The same dissipation written through the uptake kernel:
///   -int (R_in/m) [int K (n - n_bar) dx]^2 dy
///   + int n (a - int K (R_in/m) int K n_bar dx' dy) dx
double dissipation_dc_resource_form(const Vector& n, const ESDCandidate& esd, const Coefficients& coeffs);

}  // namespace chemred
