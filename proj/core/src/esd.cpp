#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>

#include <Eigen/LU>

#include "chemred/diagnostics.hpp"
#include "chemred/errors.hpp"

namespace chemred {

namespace {

std::string list_nodes(const std::vector<std::size_t>& nodes) {
  std::string s;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(nodes[i]);
  }
  return s;
}

std::vector<std::size_t> normalized_support(const std::vector<std::size_t>& support, std::size_t n) {
  std::vector<std::size_t> s(support);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (!s.empty() && s.back() >= n) {
    throw std::invalid_argument("support node " + std::to_string(s.back()) + " is outside the grid");
  }
  return s;
}

// Restricted linear solve; nullopt when the system is singular.
std::optional<Vector> solve_direct(const std::vector<std::size_t>& support, const Coefficients& coeffs,
                                   const ReducedKernel& rk) {
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix A(k, k);
  Vector rhs(k);
  const auto& w = coeffs.grid_x.weights();
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto si = static_cast<Eigen::Index>(support[static_cast<std::size_t>(i)]);
    rhs[i] = coeffs.growth[si];
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto sj = static_cast<Eigen::Index>(support[static_cast<std::size_t>(j)]);
      A(i, j) = rk.matrix()(si, sj) * w[sj];
    }
  }
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) return std::nullopt;
  Vector sol = lu.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  return sol;
}

// Newton iteration for the chemostat support equations.
std::optional<Vector> solve_chemostat(const std::vector<std::size_t>& support, const Coefficients& coeffs,
                                      double epsilon, const Vector& start) {
  const auto k = static_cast<Eigen::Index>(support.size());
  const auto nx = static_cast<Eigen::Index>(coeffs.grid_x.size());
  const auto& wx = coeffs.grid_x.weights();
  const auto& wy = coeffs.grid_y.weights();
  Vector sol = start;
  Vector density = Vector::Zero(nx);
  auto scatter = [&](const Vector& v) {
    density.setZero();
    for (Eigen::Index i = 0; i < k; ++i) density[static_cast<Eigen::Index>(support[i])] = v[i];
  };
  for (int iter = 0; iter < 100; ++iter) {
    scatter(sol);
    const Vector fit = fitness_chemostat(density, coeffs, epsilon);
    Vector residual(k);
    for (Eigen::Index i = 0; i < k; ++i) residual[i] = fit[static_cast<Eigen::Index>(support[i])];
    if (residual.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, coeffs.growth_sup())) return sol;

    const Vector load = coeffs.uptake.transpose() * wx.cwiseProduct(density);
    const Vector sens = (wy.array() * coeffs.supply.array() * coeffs.renewal.array() /
                         (coeffs.renewal.array() + epsilon * load.array()).square())
                            .matrix();
    Matrix J(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto si = static_cast<Eigen::Index>(support[i]);
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto sj = static_cast<Eigen::Index>(support[j]);
        J(i, j) = -(coeffs.uptake.row(si).transpose().cwiseProduct(sens)).dot(coeffs.uptake.row(sj).transpose()) *
                  wx[sj];
      }
    }
    Eigen::FullPivLU<Matrix> lu(J);
    if (!lu.isInvertible()) return std::nullopt;
    const Vector delta = lu.solve(residual);
    // Damp so the resource load stays positive.
    double step = 1.0;
    Vector trial = sol - delta;
    for (int d = 0; d < 30; ++d) {
      scatter(trial);
      const Vector trial_load = coeffs.uptake.transpose() * wx.cwiseProduct(density);
      if (((coeffs.renewal.array() + epsilon * trial_load.array()) > 0.0).all()) break;
      step *= 0.5;
      trial = sol - step * delta;
    }
    sol = trial;
    if (!sol.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

ESDCandidate assemble(const std::vector<std::size_t>& support, const Vector& weights, std::size_t nx) {
  ESDCandidate c;
  c.support = support;
  c.density = Vector::Zero(static_cast<Eigen::Index>(nx));
  for (std::size_t i = 0; i < support.size(); ++i) {
    c.density[static_cast<Eigen::Index>(support[i])] = weights[static_cast<Eigen::Index>(i)];
  }
  return c;
}

void reject_negative(const std::vector<std::size_t>& support, const Vector& weights) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(weights[static_cast<Eigen::Index>(i)] > 0.0)) bad.push_back(support[i]);
  }
  if (!bad.empty()) throw InfeasibleSupport("infeasible support: nonpositive weight at nodes " + list_nodes(bad));
}

ESDReport report_from_fitness(const Vector& fitness, const ESDCandidate& candidate, double tol,
                              double spacing) {
  const auto support = ESDCandidate::from_density(candidate.density).support;
  ESDReport r;
  r.tolerance = tol;
  r.support = support;
  r.spacing = spacing;
  std::vector<bool> on(static_cast<std::size_t>(fitness.size()), false);
  for (auto s : support) on[s] = true;
  for (Eigen::Index i = 0; i < fitness.size(); ++i) {
    if (on[static_cast<std::size_t>(i)]) {
      r.max_support_residual = std::max(r.max_support_residual, std::abs(fitness[i]));
    } else {
      r.max_offsupport_violation = std::max(r.max_offsupport_violation, fitness[i]);
    }
  }
  r.pass = r.max_support_residual <= tol && r.max_offsupport_violation <= tol;
  return r;
}

}  // namespace

ESDCandidate esd_solve_on_support(const std::vector<std::size_t>& support, const Coefficients& coeffs,
                                  const ReducedKernel& rk) {
  const auto s = normalized_support(support, coeffs.grid_x.size());
  if (s.empty()) throw std::invalid_argument("esd_solve_on_support: empty support");
  auto sol = solve_direct(s, coeffs, rk);
  if (!sol) throw InfeasibleSupport("singular restricted system on nodes " + list_nodes(s));
  reject_negative(s, *sol);
  return assemble(s, *sol, coeffs.grid_x.size());
}

ESDCandidate esd_solve_chemostat_on_support(const std::vector<std::size_t>& support,
                                            const Coefficients& coeffs, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const auto s = normalized_support(support, coeffs.grid_x.size());
  if (s.empty()) throw std::invalid_argument("esd_solve_chemostat_on_support: empty support");
  const auto rk = reduce_kernel(coeffs);
  auto start = solve_direct(s, coeffs, rk);
  if (!start) throw InfeasibleSupport("singular restricted system on nodes " + list_nodes(s));
  auto sol = solve_chemostat(s, coeffs, epsilon, *start);
  if (!sol) throw InfeasibleSupport("Newton iteration failed on nodes " + list_nodes(s));
  reject_negative(s, *sol);
  auto c = assemble(s, *sol, coeffs.grid_x.size());
  c.resource = steady_resource(c.density, coeffs, epsilon);
  return c;
}

ESDReport esd_verify(const ESDCandidate& candidate, const Coefficients& coeffs, const ReducedKernel& rk,
                     double tol) {
  return report_from_fitness(fitness_direct(candidate.density, rk, coeffs), candidate, tol,
                             coeffs.grid_x.spacing());
}

ESDReport esd_verify_chemostat(const ESDCandidate& candidate, const Coefficients& coeffs,
                               const ScaleParams& scales, double tol) {
  scales.validate();
  return report_from_fitness(fitness_chemostat(candidate.density, coeffs, scales.epsilon), candidate, tol,
                             coeffs.grid_x.spacing());
}

ESDCandidate esd_find(const std::vector<std::size_t>& seed_support, const Coefficients& coeffs,
                      const ReducedKernel& rk, ModelKind model, const ScaleParams& scales, double tol,
                      int max_iterations) {
  scales.validate();
  const std::size_t nx = coeffs.grid_x.size();
  std::vector<std::size_t> support = normalized_support(seed_support, nx);
  std::set<std::vector<std::size_t>> visited;

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (!visited.insert(support).second) break;
    ESDCandidate cand;
    if (support.empty()) {
      cand.density = Vector::Zero(static_cast<Eigen::Index>(nx));
    } else {
      std::optional<Vector> sol = solve_direct(support, coeffs, rk);
      if (sol && model == ModelKind::chemostat) sol = solve_chemostat(support, coeffs, scales.epsilon, *sol);
      if (!sol) {
        // Drop the node whose removal is least disruptive: the last one added.
        support.pop_back();
        continue;
      }
      Eigen::Index worst = 0;
      if (sol->minCoeff(&worst) <= 0.0) {
        support.erase(support.begin() + worst);
        continue;
      }
      cand = assemble(support, *sol, nx);
    }
    const Vector fit = model == ModelKind::direct ? fitness_direct(cand.density, rk, coeffs)
                                                  : fitness_chemostat(cand.density, coeffs, scales.epsilon);
    std::vector<bool> on(nx, false);
    for (auto s : support) on[s] = true;
    double violation = 0.0;
    std::size_t violator = nx;
    for (std::size_t i = 0; i < nx; ++i) {
      const double f = fit[static_cast<Eigen::Index>(i)];
      if (!on[i] && f > violation) {
        violation = f;
        violator = i;
      }
    }
    if (violation <= tol) {
      if (model == ModelKind::chemostat) cand.resource = steady_resource(cand.density, coeffs, scales.epsilon);
      return cand;
    }
    support.push_back(violator);
    std::sort(support.begin(), support.end());
  }
  throw InfeasibleSupport("active-set search did not reach an ESD at tolerance " + std::to_string(tol));
}

}  // namespace chemred
