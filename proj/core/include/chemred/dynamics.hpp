#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "chemred/model.hpp"

namespace chemred {

/// Population density n over grid_x and resource density R over grid_y at
/// time t. Direct competition runs leave R empty.
struct State {
  Vector n;
  Vector R;
  double t = 0.0;
};

/// epsilon separates uptake and renewal scales; mu > 0 switches on the
/// mutation diffusion mu^2 Laplacian together with the 1/mu time rescaling.
struct ScaleParams {
  double epsilon = 1.0;
  double mu = 0.0;

  void validate() const;
  /// Time advanced in the reaction clock for a step of length dt.
  double effective_dt(double dt) const { return mu > 0.0 ? dt / mu : dt; }
};

enum class ModelKind { chemostat, direct };

std::string_view to_string(ModelKind kind);

/// Densities are floored here so that ln n stays finite.
inline constexpr double kDensityFloor = 1e-300;

inline constexpr double kNoGuard = std::numeric_limits<double>::infinity();

struct StepResult {
  bool accepted = false;
  /// dt_eff * max|G| of the attempted step (infinite for a non-finite update).
  double stiffness = 0.0;
};

/**
 * Operator-split stepper for the scaled chemostat.
 *
 * One step of length dt (reaction clock dt_eff = dt / mu when mu > 0):
 *  1. resource relaxation with the uptake load U(y) = (1/eps) int K n dx
 *     frozen, solved exactly: R <- R* + (R - R*) exp(-lambda dt_eff) with
 *     lambda = m / eps^2 + U and R* = (m / eps^2) R_in / lambda;
 *  2. exponential Euler for n with the growth rate
 *     G = a + (1/eps) int K (R - R_in) dy from the updated R;
 *  3. implicit diffusion (I - dt_eff mu Laplacian) when mu > 0.
 *
 * Holds scratch buffers, so one instance serves one trajectory at a time.
 */
class ChemostatStepper {
 public:
  ChemostatStepper(const Coefficients& coeffs, ScaleParams scales);

  /// Advances `state` in place unless dt_eff * max|G| exceeds `guard` or the
  /// update is non-finite; a rejected step leaves `state` untouched.
  /// Throws std::invalid_argument for dt <= 0.
  StepResult step(State& state, double dt, double guard = kNoGuard);

  /// Growth rate a + (1/eps) int K (R - R_in) dy for a given resource.
  Vector growth_rate(const Vector& R) const;

 private:
  const Coefficients* coeffs_;
  ScaleParams scales_;
  Matrix uptake_t_;   // K transposed (y x x)
  Vector weighted_n_;
  Vector load_;
  Vector gap_;
  Vector rate_;
  Vector r_next_;
  Vector n_next_;
};

/// Exponential Euler stepper for the direct competition model
///   n_t = n [a - int c(x, x') n(x') dx']   (+ mu^2 Laplacian with mu > 0).
class DirectStepper {
 public:
  DirectStepper(const ReducedKernel& kernel, const Coefficients& coeffs, ScaleParams scales);

  /// Same contract as ChemostatStepper::step; only state.n is used.
  StepResult step(State& state, double dt, double guard = kNoGuard);

  Vector growth_rate(const Vector& n) const;

 private:
  const ReducedKernel* kernel_;
  const Coefficients* coeffs_;
  ScaleParams scales_;
  Vector weighted_n_;
  Vector rate_;
  Vector n_next_;
};

/// One chemostat step on a copy of `state`; BlowUpError on a non-finite result.
State step_chemostat(const State& state, const Coefficients& coeffs, ScaleParams scales, double dt);

/// One direct competition step; returns the new density.
Vector step_direct(const Vector& n, const ReducedKernel& rk, const Coefficients& coeffs,
                   ScaleParams scales, double dt);

/// Gaussian density with the given center and variance, rescaled so its grid
/// quadrature equals `mass`.
Vector initial_condition_gaussian(double center, double variance, double mass, const TraitGrid& grid);

/// Per-sample diagnostics. S_cr / S_dc are filled by an attached probe.
struct SampleDiagnostics {
  double mass = 0.0;
  std::optional<double> resource_gap;
  std::optional<double> lyapunov_cr;
  std::optional<double> lyapunov_dc;
};

struct Trajectory {
  ModelKind model = ModelKind::chemostat;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<SampleDiagnostics> diagnostics;
  /// Largest total mass seen at any step, not just at samples.
  double max_mass = 0.0;
  /// Number of steps that needed halving to satisfy the guard.
  std::size_t halved_steps = 0;

  const State& final_state() const { return states.back(); }
};

struct RunSettings {
  double t_end = 1.0;
  double dt = 0.01;
  int sample_every = 100;
  /// Upper bound on dt_eff * max|G| for an accepted step.
  double guard = 5.0;
  int max_halvings = 30;
};

/// Called at every sample; may fill the Lyapunov fields.
using SampleProbe = std::function<void(const State&, SampleDiagnostics&)>;

/**
 * Integrates one model from `initial` up to settings.t_end.
 *
 * Samples are taken at t = 0, every `sample_every` steps and at the final
 * step. A step whose growth rate violates the guard is redone as two half
 * steps, recursively, up to max_halvings levels; BlowUpError reports the time
 * of the offending step otherwise. The result is a deterministic function of
 * the inputs.
 */
Trajectory run(ModelKind model, const Coefficients& coeffs, const ReducedKernel& kernel,
               ScaleParams scales, const State& initial, const RunSettings& settings,
               const SampleProbe& probe = {});

}  // namespace chemred
