#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chemred/diagnostics.hpp"

namespace chemred {

// ---------------------------------------------------------------------------
// Configuration

enum class ModelSelector { chemostat, direct, both };

struct GridSpec {
  double min = -2.0;
  double max = 2.0;
  std::size_t points = 201;
};

struct GaussianCoefficientSpec {
  double sigma_K = 0.5;
  double sigma_in = 0.5;
  double M_in = 1.0;
  double m = 1.0;
};

/// File paths are resolved against the directory holding the config.
struct CsvCoefficientSpec {
  std::filesystem::path growth;
  std::filesystem::path resource;
  std::filesystem::path uptake;
};

using CoefficientSpec = std::variant<GaussianCoefficientSpec, CsvCoefficientSpec>;

/// Gaussian n0; R0 = resource_factor * R_in.
struct InitialSpec {
  double center = -0.8;
  double variance = 0.005;
  double mass = 1.0;
  double resource_factor = 1.0;
};

struct TimeSpec {
  double t_end = 1.0;
  double dt = 0.01;
  int sample_every = 100;
};

struct SingleExperiment {};
struct BranchingExperiment {};
struct EpsilonSweep {
  std::vector<double> epsilons;
};
struct RatioArm {
  double m = 1.0;
  double M_in = 1.0;
};
struct RatioPair {
  RatioArm reference;
  RatioArm variant;
};
struct RatioStudy {
  std::vector<RatioPair> pairs;
};

using Experiment = std::variant<SingleExperiment, EpsilonSweep, RatioStudy, BranchingExperiment>;

struct RunConfig {
  ModelSelector model = ModelSelector::both;
  GridSpec grid_x;
  GridSpec grid_y;
  CoefficientSpec coefficients = GaussianCoefficientSpec{};
  ScaleParams scales;
  InitialSpec initial;
  TimeSpec time;
  std::filesystem::path output_dir = "out";
  Experiment experiment = SingleExperiment{};
  std::optional<std::filesystem::path> esd_candidate;
  double peak_threshold = 0.1;
  std::string comment;
};

/// Reads and validates a JSON config. Unknown keys are rejected with their
/// path; every violated constraint is listed in the ConfigError message.
/// Parse errors carry line and column.
RunConfig load_config(const std::filesystem::path& path);

/// Same, from text; relative file paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");

/// Canonical JSON form of a config (sorted keys, full precision).
std::string canonical_json(const RunConfig& config);

/// FNV-1a 64-bit hash of canonical_json, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// ---------------------------------------------------------------------------
// Experiment setup

struct Setup {
  Coefficients coeffs;
  ReducedKernel kernel;
  State initial;
};

/// Grids, coefficients (with an optional (m, M_in) override for Gaussian
/// specs), reduced kernel and initial state for a config.
Setup build_setup(const RunConfig& config, const std::optional<RatioArm>& arm = std::nullopt);

/// Reads a candidate file (columns x,density; x must match grid nodes).
ESDCandidate load_esd_candidate(const std::filesystem::path& path, const TraitGrid& grid);

/// Writes a candidate in the format load_esd_candidate reads (support rows).
void write_esd_candidate(const std::filesystem::path& path, const ESDCandidate& esd, const TraitGrid& grid);

// ---------------------------------------------------------------------------
// Experiments

struct ComparisonResult {
  double epsilon = 0.0;
  Trajectory chemostat;
  Trajectory direct;
  double rel_error_R = 0.0;
  double l1_distance = 0.0;
  /// (M_chemostat - M_direct) / M_chemostat at t_end.
  double relative_mass_gap = 0.0;
  double seconds = 0.0;
};

/// Runs both models from the same initial state at config.scales.
ComparisonResult run_model_comparison(const RunConfig& config);

struct SweepRow {
  double epsilon = 0.0;
  double rel_error_R = 0.0;
  double l1_distance = 0.0;
  std::size_t peaks_chemostat = 0;
  std::size_t peaks_direct = 0;
  double mass_chemostat = 0.0;
  double mass_direct = 0.0;
  double seconds = 0.0;
  /// Empty when the row succeeded.
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// One comparison per successful row, same order (empty trajectories for
  /// failed rows).
  std::vector<ComparisonResult> comparisons;
};

/// One row per epsilon, ordered by epsilon descending; rows run on up to
/// `threads` workers and do not share mutable state. A failing row records
/// its error and the sweep continues.
SweepResult run_epsilon_sweep(const RunConfig& config, int threads = 1);

struct RatioPairResult {
  RatioPair pair;
  bool ratio_preserved = false;
  double l1_distance = 0.0;
  double reference_mass = 0.0;
  /// l1_distance / reference_mass
  double relative_distance = 0.0;
  /// max |c_ref - c_var| / max |c_ref| of the reduced kernels.
  double kernel_rel_difference = 0.0;
  Vector reference_density;
  Vector variant_density;
};

struct RatioReport {
  std::vector<RatioPairResult> pairs;
};

/// Chemostat runs for every arm at config.scales.epsilon and L1 distances
/// between the final densities of each pair.
RatioReport run_ratio_study(const RunConfig& config, int threads = 1);

struct BranchingResult {
  std::optional<Trajectory> chemostat;
  std::optional<Trajectory> direct;
  /// Peak counts per sample, aligned with the trajectory times.
  std::vector<std::size_t> peaks_chemostat;
  std::vector<std::size_t> peaks_direct;
};

BranchingResult run_branching(const RunConfig& config, int threads = 1);

// ---------------------------------------------------------------------------
// Output

/// Executes the configured experiment and writes its artifacts plus
/// manifest.json into config.output_dir. Returns the written file names.
/// File contents are a deterministic function of the config, except the
/// `seconds` column of sweep.csv.
std::vector<std::string> run_experiment(const RunConfig& config, int threads = 1);

/// Row layout of sweep.csv.
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

/// First row: x nodes. Following rows: t then the density at each node.
std::string density_heatmap_csv(const Trajectory& traj, const TraitGrid& grid);

/// Columns t, mass, resource_gap, S_cr, S_dc (blank when not available).
std::string timeseries_csv(const Trajectory& traj);

/// Runs `count` jobs on up to `threads` workers; job i writes only slot i.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job);

}  // namespace chemred
