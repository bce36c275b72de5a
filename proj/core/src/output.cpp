#include <fstream>
#include <string>

#include <json.hpp>

#include "chemred/csv.hpp"
#include "chemred/errors.hpp"
#include "chemred/harness.hpp"

namespace chemred {

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); }

class Emitter {
 public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
    files_.push_back(name);
    sizes_.push_back(content.size());
  }

  void manifest(const RunConfig& config, const std::vector<std::string>& failures) {
    nlohmann::json j;
    const std::string hash = config_hash(config);
    j["config_hash"] = hash;
    j["config"] = nlohmann::json::parse(canonical_json(config));
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < files_.size(); ++i) {
      list.push_back({{"file", files_[i]}, {"bytes", sizes_[i]}, {"config_hash", hash}});
    }
    j["artifacts"] = list;
    j["failures"] = failures;
    write("manifest.json", j.dump(2) + "\n");
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  std::vector<std::size_t> sizes_;
};

std::string final_density_csv(const TraitGrid& grid, const Trajectory* chem, const Trajectory* direct) {
  std::vector<std::string> header{"x"};
  if (chem) header.push_back("n_chemostat");
  if (direct) header.push_back("n_direct");
  std::string s = csv::join(header);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    std::vector<std::string> row{csv::format(grid.node(i))};
    if (chem) row.push_back(csv::format(chem->final_state().n[k]));
    if (direct) row.push_back(csv::format(direct->final_state().n[k]));
    s += csv::join(row);
  }
  return s;
}

std::string final_resource_csv(const TraitGrid& grid, const Vector& supply, const Trajectory& chem) {
  std::string s = csv::join({"y", "R_in", "R"});
  const Vector& R = chem.final_state().R;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    s += csv::join({csv::format(grid.node(i)), csv::format(supply[k]), csv::format(R[k])});
  }
  return s;
}

std::string mass_series_csv(const Trajectory& chem, const Trajectory& direct) {
  std::string s = csv::join({"t", "mass_chemostat", "mass_direct"});
  for (std::size_t i = 0; i < chem.times.size(); ++i) {
    s += csv::join({csv::format(chem.times[i]), csv::format(chem.diagnostics[i].mass),
                    csv::format(direct.diagnostics[i].mass)});
  }
  return s;
}

void emit_models(Emitter& out, const Setup& setup, const Trajectory* chem, const Trajectory* direct) {
  const auto& gx = setup.coeffs.grid_x;
  // The first model present owns the unsuffixed names.
  if (chem) {
    out.write("timeseries.csv", timeseries_csv(*chem));
    out.write("density_heatmap.csv", density_heatmap_csv(*chem, gx));
    out.write("final_resource.csv", final_resource_csv(setup.coeffs.grid_y, setup.coeffs.supply, *chem));
  }
  if (direct) {
    const std::string suffix = chem ? "_direct" : "";
    out.write("timeseries" + suffix + ".csv", timeseries_csv(*direct));
    out.write("density_heatmap" + suffix + ".csv", density_heatmap_csv(*direct, gx));
  }
  out.write("final_density.csv", final_density_csv(gx, chem, direct));
}

std::string suffix_for(double eps) { return "_eps" + csv::format(eps); }

}  // namespace

std::string sweep_csv_header() {
  return "epsilon,rel_error_R,l1_distance,peaks_chemostat,peaks_direct,mass_chemostat,mass_direct,seconds\n";
}

std::string sweep_csv_row(const SweepRow& r) {
  if (!r.error.empty()) return csv::join({csv::format(r.epsilon), "", "", "", "", "", "", csv::format(r.seconds)});
  return csv::join({csv::format(r.epsilon), csv::format(r.rel_error_R), csv::format(r.l1_distance),
                    std::to_string(r.peaks_chemostat), std::to_string(r.peaks_direct),
                    csv::format(r.mass_chemostat), csv::format(r.mass_direct), csv::format(r.seconds)});
}

std::string density_heatmap_csv(const Trajectory& traj, const TraitGrid& grid) {
  std::vector<std::string> fields{"t"};
  for (std::size_t i = 0; i < grid.size(); ++i) fields.push_back(csv::format(grid.node(i)));
  std::string s = csv::join(fields);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    fields.assign(1, csv::format(traj.times[k]));
    const Vector& n = traj.states[k].n;
    for (Eigen::Index i = 0; i < n.size(); ++i) fields.push_back(csv::format(n[i]));
    s += csv::join(fields);
  }
  return s;
}

std::string timeseries_csv(const Trajectory& traj) {
  std::string s = csv::join({"t", "mass", "resource_gap", "S_cr", "S_dc"});
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& d = traj.diagnostics[k];
    s += csv::join({csv::format(traj.times[k]), csv::format(d.mass), opt(d.resource_gap), opt(d.lyapunov_cr),
                    opt(d.lyapunov_dc)});
  }
  return s;
}

std::vector<std::string> run_experiment(const RunConfig& config, int threads) {
  std::vector<std::string> failures;

  if (std::holds_alternative<EpsilonSweep>(config.experiment)) {
    const auto result = run_epsilon_sweep(config, threads);
    Emitter out(config.output_dir);
    std::string table = sweep_csv_header();
    const Setup setup = build_setup(config);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const auto& row = result.rows[i];
      table += sweep_csv_row(row);
      if (!row.error.empty()) {
        failures.push_back("epsilon=" + csv::format(row.epsilon) + ": " + row.error);
        continue;
      }
      const auto& cmp = result.comparisons[i];
      const std::string sfx = suffix_for(row.epsilon);
      out.write("mass" + sfx + ".csv", mass_series_csv(cmp.chemostat, cmp.direct));
      out.write("final_density" + sfx + ".csv", final_density_csv(setup.coeffs.grid_x, &cmp.chemostat, &cmp.direct));
      out.write("final_resource" + sfx + ".csv",
                final_resource_csv(setup.coeffs.grid_y, setup.coeffs.supply, cmp.chemostat));
    }
    out.write("sweep.csv", table);
    out.manifest(config, failures);
    return out.files();
  }

  if (std::holds_alternative<RatioStudy>(config.experiment)) {
    const auto report = run_ratio_study(config, threads);
    Emitter out(config.output_dir);
    std::string table = csv::join({"pair", "reference_m", "reference_M_in", "variant_m", "variant_M_in",
                                   "ratio_preserved", "l1_distance", "reference_mass", "relative_distance",
                                   "kernel_rel_difference"});
    const auto gx = TraitGrid::uniform(config.grid_x.min, config.grid_x.max, config.grid_x.points);
    std::vector<std::string> header{"x"};
    for (std::size_t p = 0; p < report.pairs.size(); ++p) {
      const auto& r = report.pairs[p];
      table += csv::join({std::to_string(p), csv::format(r.pair.reference.m), csv::format(r.pair.reference.M_in),
                          csv::format(r.pair.variant.m), csv::format(r.pair.variant.M_in),
                          r.ratio_preserved ? "1" : "0", csv::format(r.l1_distance), csv::format(r.reference_mass),
                          csv::format(r.relative_distance), csv::format(r.kernel_rel_difference)});
      header.push_back("pair" + std::to_string(p) + "_reference");
      header.push_back("pair" + std::to_string(p) + "_variant");
    }
    std::string densities = csv::join(header);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      std::vector<std::string> row{csv::format(gx.node(i))};
      for (const auto& r : report.pairs) {
        row.push_back(csv::format(r.reference_density[k]));
        row.push_back(csv::format(r.variant_density[k]));
      }
      densities += csv::join(row);
    }
    out.write("ratio_study.csv", table);
    out.write("ratio_densities.csv", densities);
    out.manifest(config, failures);
    return out.files();
  }

  // Single and branching runs share the per-model artifacts.
  const auto result = run_branching(config, threads);
  const Setup setup = build_setup(config);
  Emitter out(config.output_dir);
  const Trajectory* chem = result.chemostat ? &*result.chemostat : nullptr;
  const Trajectory* direct = result.direct ? &*result.direct : nullptr;
  emit_models(out, setup, chem, direct);

  if (chem && direct) {
    const State& fc = chem->final_state();
    const State& fd = direct->final_state();
    const double mc = mass(fc.n, setup.coeffs.grid_x);
    const double md = mass(fd.n, setup.coeffs.grid_x);
    std::string summary = csv::join({"epsilon", "mu", "rel_error_R", "l1_distance", "mass_chemostat",
                                     "mass_direct", "relative_mass_gap"});
    summary += csv::join({csv::format(config.scales.epsilon), csv::format(config.scales.mu),
                          csv::format(rel_error_R(fc.R, setup.coeffs.supply)),
                          csv::format(l1_distance(fc.n, fd.n, setup.coeffs.grid_x)), csv::format(mc),
                          csv::format(md), csv::format(mc > 0.0 ? (mc - md) / mc : 0.0)});
    out.write("summary.csv", summary);
  }
  if (std::holds_alternative<BranchingExperiment>(config.experiment)) {
    const Trajectory& ref = chem ? *chem : *direct;
    std::vector<std::string> header{"t"};
    if (chem) header.push_back("peaks_chemostat");
    if (direct) header.push_back("peaks_direct");
    std::string peaks = csv::join(header);
    for (std::size_t k = 0; k < ref.times.size(); ++k) {
      std::vector<std::string> row{csv::format(ref.times[k])};
      if (chem) row.push_back(std::to_string(result.peaks_chemostat[k]));
      if (direct) row.push_back(std::to_string(result.peaks_direct[k]));
      peaks += csv::join(row);
    }
    out.write("peaks.csv", peaks);
  }
  out.manifest(config, failures);
  return out.files();
}

}  // namespace chemred
