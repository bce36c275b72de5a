#include "chemred/diagnostics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "chemred/csv.hpp"

namespace chemred {

namespace {

void require_same(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

// sum_i w_i * weight_i * ln(value_i), skipping zero weights.
double weighted_log(const Vector& quad, const Vector& weight, const Vector& value, const char* what) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (weight[i] == 0.0) continue;
    if (!(value[i] > 0.0)) {
      throw std::domain_error(std::string(what) + ": log of nonpositive value at node " + std::to_string(i));
    }
    s += quad[i] * weight[i] * std::log(value[i]);
  }
  return s;
}

}  // namespace

double mass(const Vector& n, const TraitGrid& grid) { return integrate(n, grid); }

double resource_gap(const Vector& R, const Coefficients& coeffs) {
  require_same(R.size(), coeffs.supply.size(), "resource_gap");
  return integrate((R - coeffs.supply).cwiseAbs(), coeffs.grid_y);
}

double rel_error_R(const Vector& R, const Vector& supply) {
  require_same(R.size(), supply.size(), "rel_error_R");
  if ((supply.array() <= 0.0).any()) throw std::invalid_argument("rel_error_R: R_in must be positive");
  return ((R - supply).cwiseAbs().cwiseQuotient(supply)).maxCoeff();
}

double l1_distance(const Vector& n1, const Vector& n2, const TraitGrid& grid) {
  require_same(n1.size(), n2.size(), "l1_distance");
  return integrate((n1 - n2).cwiseAbs(), grid);
}

Vector hopf_cole(const Vector& n, double mu, std::size_t* floored) {
  if (!(mu > 0.0)) throw std::invalid_argument("hopf_cole: mu must be positive");
  Vector u(n.size());
  std::size_t at_floor = 0;
  for (Eigen::Index i = 0; i < n.size(); ++i) {
    if (n[i] < 0.0) throw std::domain_error("hopf_cole: negative density at node " + std::to_string(i));
    double v = n[i];
    if (v <= kDensityFloor) {
      ++at_floor;
      v = kDensityFloor;
    }
    u[i] = mu * std::log(v);
  }
  if (floored) *floored = at_floor;
  return u;
}

double resource_gap_bound(double t, double gap0, const Vector& R0, const Coefficients& coeffs,
                          double epsilon, double mass_sup) {
  require_same(R0.size(), coeffs.supply.size(), "resource_gap_bound");
  const double m_min = coeffs.renewal_min();
  const double r_max = R0.cwiseMax(coeffs.supply).maxCoeff();
  return gap0 / epsilon * std::exp(-m_min * t / (epsilon * epsilon)) +
         r_max / m_min * coeffs.uptake_sup() * mass_sup;
}

Peaks peak_count(const Vector& n, const TraitGrid& grid, double rel_threshold) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw std::invalid_argument("peak_count: threshold must lie in (0, 1)");
  }
  require_same(n.size(), static_cast<Eigen::Index>(grid.size()), "peak_count");
  Peaks peaks;
  const Eigen::Index size = n.size();
  if (size == 0) return peaks;
  const double top = n.maxCoeff();
  if (!(top > 0.0)) return peaks;
  const double floor = rel_threshold * top;
  Eigen::Index i = 0;
  while (i < size) {
    // Extent of the plateau starting at i.
    Eigen::Index j = i;
    while (j + 1 < size && n[j + 1] == n[i]) ++j;
    const bool left_lower = (i == 0) || n[i - 1] < n[i];
    const bool right_lower = (j == size - 1) || n[j + 1] < n[i];
    if (left_lower && right_lower && n[i] >= floor) {
      peaks.indices.push_back(static_cast<std::size_t>(i));
      peaks.locations.push_back(grid.node(static_cast<std::size_t>(i)));
    }
    i = j + 1;
  }
  return peaks;
}

double quadratic_form(const ReducedKernel& rk, const Vector& v) {
  const Vector wv = rk.grid().weights().cwiseProduct(v);
  require_same(wv.size(), rk.matrix().cols(), "quadratic_form");
  return wv.dot(rk.matrix() * wv);
}

Spectrum weighted_spectrum(const ReducedKernel& rk) {
  const Vector root = rk.grid().weights().cwiseSqrt();
  const Matrix scaled = root.asDiagonal() * rk.matrix() * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(scaled, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

ESDCandidate ESDCandidate::from_density(Vector density) {
  ESDCandidate c;
  const double top = density.size() ? density.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < density.size(); ++i) {
    if (density[i] < 0.0) throw std::invalid_argument("ESD density must be nonnegative");
    if (top > 0.0 && density[i] > 1e-12 * top) {
      c.support.push_back(static_cast<std::size_t>(i));
    } else {
      density[i] = 0.0;
    }
  }
  c.density = std::move(density);
  return c;
}

std::string ESDReport::csv_header() {
  return "tolerance,max_support_residual,max_offsupport_violation,verdict,spacing,support\n";
}

std::string ESDReport::csv_row() const {
  std::string nodes;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i) nodes += ' ';
    nodes += std::to_string(support[i]);
  }
  return csv::join({csv::format(tolerance), csv::format(max_support_residual),
                    csv::format(max_offsupport_violation), pass ? "pass" : "fail", csv::format(spacing),
                    nodes});
}

Vector steady_resource(const Vector& density, const Coefficients& coeffs, double epsilon) {
  require_same(density.size(), static_cast<Eigen::Index>(coeffs.grid_x.size()), "steady_resource");
  const Vector load = coeffs.uptake.transpose() * coeffs.grid_x.weights().cwiseProduct(density);
  return (coeffs.supply.array() / (1.0 + epsilon * load.array() / coeffs.renewal.array())).matrix();
}

Vector fitness_direct(const Vector& density, const ReducedKernel& rk, const Coefficients& coeffs) {
  return coeffs.growth - rk.apply(density);
}

Vector fitness_chemostat(const Vector& density, const Coefficients& coeffs, double epsilon) {
  // R_bar - R_in = -R_in eps L / (m + eps L), L = int K n_bar dx, written
  // without the cancelling subtraction.
  const Vector load = coeffs.uptake.transpose() * coeffs.grid_x.weights().cwiseProduct(density);
  const Vector gap = (-coeffs.supply.array() * epsilon * load.array() /
                      (coeffs.renewal.array() + epsilon * load.array()))
                         .matrix();
  return coeffs.growth + coeffs.uptake * coeffs.grid_y.weights().cwiseProduct(gap) / epsilon;
}

double lyapunov_cr(const State& state, const ESDCandidate& esd, const Coefficients& coeffs) {
  if (!esd.resource) throw std::invalid_argument("lyapunov_cr: candidate carries no steady resource");
  require_same(state.n.size(), esd.density.size(), "lyapunov_cr");
  require_same(state.R.size(), esd.resource->size(), "lyapunov_cr");
  const auto& wx = coeffs.grid_x.weights();
  const auto& wy = coeffs.grid_y.weights();
  return -weighted_log(wx, esd.density, state.n, "lyapunov_cr (n)") -
         weighted_log(wy, *esd.resource, state.R, "lyapunov_cr (R)") + wx.dot(state.n) + wy.dot(state.R);
}

double dissipation_cr(const State& state, const ESDCandidate& esd, const Coefficients& coeffs,
                      const ScaleParams& scales) {
  if (!esd.resource) throw std::invalid_argument("dissipation_cr: candidate carries no steady resource");
  scales.validate();
  const double eps = scales.epsilon;
  const Vector& Rb = *esd.resource;
  require_same(state.R.size(), Rb.size(), "dissipation_cr");
  require_same(state.n.size(), esd.density.size(), "dissipation_cr");
  double quad = 0.0;
  const auto& wy = coeffs.grid_y.weights();
  for (Eigen::Index k = 0; k < Rb.size(); ++k) {
    if (!(state.R[k] > 0.0) || !(Rb[k] > 0.0)) {
      throw std::domain_error("dissipation_cr: zero resource at node " + std::to_string(k));
    }
    const double d = Rb[k] - state.R[k];
    quad += wy[k] * coeffs.renewal[k] * coeffs.supply[k] / (eps * eps * Rb[k] * state.R[k]) * d * d;
  }
  const Vector fit = coeffs.growth + coeffs.uptake * wy.cwiseProduct(Rb - coeffs.supply) / eps;
  return -quad + coeffs.grid_x.weights().dot(state.n.cwiseProduct(fit));
}

double lyapunov_dc(const Vector& n, const ESDCandidate& esd, const TraitGrid& grid) {
  require_same(n.size(), esd.density.size(), "lyapunov_dc");
  return -weighted_log(grid.weights(), esd.density, n, "lyapunov_dc") + integrate(n, grid);
}

double dissipation_dc(const Vector& n, const ESDCandidate& esd, const ReducedKernel& rk,
                      const Coefficients& coeffs) {
  require_same(n.size(), esd.density.size(), "dissipation_dc");
  const Vector diff = n - esd.density;
  const Vector fit = fitness_direct(esd.density, rk, coeffs);
  return -quadratic_form(rk, diff) + coeffs.grid_x.weights().dot(n.cwiseProduct(fit));
}

double dissipation_dc_resource_form(const Vector& n, const ESDCandidate& esd, const Coefficients& coeffs) {
  require_same(n.size(), esd.density.size(), "dissipation_dc_resource_form");
  const auto& wx = coeffs.grid_x.weights();
  const auto& wy = coeffs.grid_y.weights();
  const Vector ratio = coeffs.supply.cwiseQuotient(coeffs.renewal);
  const Vector load_diff = coeffs.uptake.transpose() * wx.cwiseProduct(n - esd.density);
  const Vector load_bar = coeffs.uptake.transpose() * wx.cwiseProduct(esd.density);
  const double quad = wy.dot(ratio.cwiseProduct(load_diff.cwiseProduct(load_diff)));
  const Vector fit = coeffs.growth - coeffs.uptake * wy.cwiseProduct(ratio.cwiseProduct(load_bar));
  return -quad + wx.dot(n.cwiseProduct(fit));
}

}  // namespace chemred
