#include "chemred/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chemred/errors.hpp"

namespace chemred {

void ScaleParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("mu must be nonnegative");
  }
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::chemostat ? "chemostat" : "direct";
}

namespace {

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
}

// Exponential Euler followed by the optional implicit diffusion solve.
// Nodes that held positive density are floored, exact zeros stay zero.
// Returns false for a non-finite result.
bool advance_density(const Vector& n, const Vector& rate, double dt_eff, const ScaleParams& scales,
                     const TraitGrid& grid, Vector& out) {
  out = n.cwiseProduct((dt_eff * rate).array().exp().matrix());
  if (scales.mu > 0.0) solve_implicit_diffusion(grid, dt_eff * scales.mu, out);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] < kDensityFloor && (n[i] > 0.0 || out[i] > 0.0)) out[i] = kDensityFloor;
  }
  return out.allFinite();
}

}  // namespace

ChemostatStepper::ChemostatStepper(const Coefficients& coeffs, ScaleParams scales)
    : coeffs_(&coeffs), scales_(scales), uptake_t_(coeffs.uptake.transpose()) {
  scales_.validate();
}

Vector ChemostatStepper::growth_rate(const Vector& R) const {
  const Vector gap = coeffs_->grid_y.weights().cwiseProduct(R - coeffs_->supply);
  return coeffs_->growth + (coeffs_->uptake * gap) / scales_.epsilon;
}

StepResult ChemostatStepper::step(State& state, double dt, double guard) {
  require_dt(dt);
  const Coefficients& c = *coeffs_;
  const double eps = scales_.epsilon;
  const double dt_eff = scales_.effective_dt(dt);
  const double renew_scale = 1.0 / (eps * eps);

  weighted_n_ = c.grid_x.weights().cwiseProduct(state.n);
  load_.noalias() = uptake_t_ * weighted_n_;
  load_ /= eps;

  // Exact relaxation with frozen load. The gap R - R_in is assembled from
  // its two pieces rather than by subtraction so it stays accurate when
  // R is within O(eps) of R_in.
  const Eigen::Index ny = load_.size();
  r_next_.resize(ny);
  gap_.resize(ny);
  for (Eigen::Index k = 0; k < ny; ++k) {
    const double renew = c.renewal[k] * renew_scale;
    const double lambda = renew + load_[k];
    const double r_star = renew * c.supply[k] / lambda;
    const double decay = std::exp(-lambda * dt_eff);
    const double transient = (state.R[k] - r_star) * decay;
    r_next_[k] = std::max(r_star + transient, 0.0);
    gap_[k] = (-c.supply[k] * load_[k] / lambda + transient) * c.grid_y.weights()[k];
  }

  rate_.noalias() = c.uptake * gap_;
  rate_ /= eps;
  rate_ += c.growth;

  StepResult result;
  result.stiffness = dt_eff * rate_.cwiseAbs().maxCoeff();
  if (!std::isfinite(result.stiffness)) {
    result.stiffness = std::numeric_limits<double>::infinity();
    return result;
  }
  if (result.stiffness > guard) return result;
  if (!advance_density(state.n, rate_, dt_eff, scales_, c.grid_x, n_next_) || !r_next_.allFinite()) {
    result.stiffness = std::numeric_limits<double>::infinity();
    return result;
  }
  state.n.swap(n_next_);
  state.R.swap(r_next_);
  state.t += dt;
  result.accepted = true;
  return result;
}

DirectStepper::DirectStepper(const ReducedKernel& kernel, const Coefficients& coeffs, ScaleParams scales)
    : kernel_(&kernel), coeffs_(&coeffs), scales_(scales) {
  scales_.validate();
  if (!kernel.grid().same_as(coeffs.grid_x)) {
    throw std::invalid_argument("direct stepper: kernel and coefficients use different x grids");
  }
}

Vector DirectStepper::growth_rate(const Vector& n) const {
  return coeffs_->growth - kernel_->apply(n);
}

StepResult DirectStepper::step(State& state, double dt, double guard) {
  require_dt(dt);
  const double dt_eff = scales_.effective_dt(dt);
  weighted_n_ = coeffs_->grid_x.weights().cwiseProduct(state.n);
  rate_.noalias() = kernel_->matrix() * weighted_n_;
  rate_ = coeffs_->growth - rate_;

  StepResult result;
  result.stiffness = dt_eff * rate_.cwiseAbs().maxCoeff();
  if (!std::isfinite(result.stiffness)) {
    result.stiffness = std::numeric_limits<double>::infinity();
    return result;
  }
  if (result.stiffness > guard) return result;
  if (!advance_density(state.n, rate_, dt_eff, scales_, coeffs_->grid_x, n_next_)) {
    result.stiffness = std::numeric_limits<double>::infinity();
    return result;
  }
  state.n.swap(n_next_);
  state.t += dt;
  result.accepted = true;
  return result;
}

State step_chemostat(const State& state, const Coefficients& coeffs, ScaleParams scales, double dt) {
  State next = state;
  ChemostatStepper stepper(coeffs, scales);
  if (!stepper.step(next, dt).accepted) {
    throw BlowUpError("chemostat step produced a non-finite state", state.t);
  }
  return next;
}

Vector step_direct(const Vector& n, const ReducedKernel& rk, const Coefficients& coeffs,
                   ScaleParams scales, double dt) {
  State s{n, Vector{}, 0.0};
  DirectStepper stepper(rk, coeffs, scales);
  if (!stepper.step(s, dt).accepted) {
    throw BlowUpError("direct step produced a non-finite state", 0.0);
  }
  return s.n;
}

Vector initial_condition_gaussian(double center, double variance, double mass, const TraitGrid& grid) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("initial variance must be positive");
  }
  if (!(mass >= 0.0) || !std::isfinite(mass) || !std::isfinite(center)) {
    throw std::invalid_argument("initial center and mass must be finite, mass nonnegative");
  }
  const Vector d = grid.nodes().array() - center;
  Vector n = (-d.array().square() / (2.0 * variance)).exp().matrix();
  const double total = integrate(n, grid);
  if (!(total > 0.0)) {
    throw std::invalid_argument("initial Gaussian underflows on the grid");
  }
  n *= mass / total;
  return n.cwiseMax(kDensityFloor);
}

namespace {

template <class Stepper>
struct Driver {
  Stepper& stepper;
  const RunSettings& settings;
  std::size_t halved = 0;

  void advance(State& state, double dt, int level) {
    if (stepper.step(state, dt, settings.guard).accepted) return;
    if (level >= settings.max_halvings) {
      throw BlowUpError("step-size guard unmet at t=" + std::to_string(state.t) + " after " +
                            std::to_string(level) + " halvings",
                        state.t);
    }
    if (level == 0) ++halved;
    advance(state, 0.5 * dt, level + 1);
    advance(state, 0.5 * dt, level + 1);
  }
};

SampleDiagnostics sample(const State& s, const Coefficients& coeffs, ModelKind model,
                         const SampleProbe& probe) {
  SampleDiagnostics d;
  d.mass = integrate(s.n, coeffs.grid_x);
  if (model == ModelKind::chemostat) {
    d.resource_gap = integrate((s.R - coeffs.supply).cwiseAbs(), coeffs.grid_y);
  }
  if (probe) probe(s, d);
  return d;
}

template <class Stepper>
Trajectory integrate_with(Stepper& stepper, ModelKind model, const Coefficients& coeffs,
                          const State& initial, const RunSettings& settings, const SampleProbe& probe) {
  Trajectory traj;
  traj.model = model;
  State state = initial;
  const double t0 = initial.t;
  const auto steps = static_cast<long long>(std::llround(settings.t_end / settings.dt));
  const int every = std::max(settings.sample_every, 1);

  traj.times.push_back(state.t);
  traj.states.push_back(state);
  traj.diagnostics.push_back(sample(state, coeffs, model, probe));
  traj.max_mass = traj.diagnostics.back().mass;

  Driver<Stepper> driver{stepper, settings};
  for (long long k = 1; k <= steps; ++k) {
    driver.advance(state, settings.dt, 0);
    // Re-anchor to avoid drift from repeated addition.
    state.t = t0 + static_cast<double>(k) * settings.dt;
    traj.max_mass = std::max(traj.max_mass, integrate(state.n, coeffs.grid_x));
    if (k % every == 0 || k == steps) {
      traj.times.push_back(state.t);
      traj.states.push_back(state);
      traj.diagnostics.push_back(sample(state, coeffs, model, probe));
    }
  }
  traj.halved_steps = driver.halved;
  return traj;
}

}  // namespace

Trajectory run(ModelKind model, const Coefficients& coeffs, const ReducedKernel& kernel,
               ScaleParams scales, const State& initial, const RunSettings& settings,
               const SampleProbe& probe) {
  scales.validate();
  require_dt(settings.dt);
  if (!(settings.t_end >= 0.0) || !std::isfinite(settings.t_end)) {
    throw std::invalid_argument("t_end must be finite and nonnegative");
  }
  if (initial.n.size() != static_cast<Eigen::Index>(coeffs.grid_x.size())) {
    throw std::invalid_argument("initial density does not match the x grid");
  }
  if ((initial.n.array() < 0.0).any()) throw std::invalid_argument("initial density must be nonnegative");
  if (model == ModelKind::chemostat) {
    if (initial.R.size() != static_cast<Eigen::Index>(coeffs.grid_y.size())) {
      throw std::invalid_argument("initial resource does not match the y grid");
    }
    if ((initial.R.array() < 0.0).any()) throw std::invalid_argument("initial resource must be nonnegative");
    ChemostatStepper stepper(coeffs, scales);
    return integrate_with(stepper, model, coeffs, initial, settings, probe);
  }
  DirectStepper stepper(kernel, coeffs, scales);
  return integrate_with(stepper, model, coeffs, initial, settings, probe);
}

}  // namespace chemred
