#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chemred/csv.hpp"
#include "chemred/errors.hpp"
#include "chemred/harness.hpp"

namespace {

enum Exit : int { ok = 0, verdict_failed = 1, config_error = 2, blow_up = 3, io_error = 4 };

using namespace chemred;

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw IoError("cannot write " + path.string());
}

std::string kernel_csv(const ReducedKernel& rk) {
  const auto& g = rk.grid();
  std::vector<std::string> fields{"x"};
  for (std::size_t j = 0; j < g.size(); ++j) fields.push_back(csv::format(g.node(j)));
  std::string s = csv::join(fields);
  for (std::size_t i = 0; i < g.size(); ++i) {
    fields.assign(1, csv::format(g.node(i)));
    for (std::size_t j = 0; j < g.size(); ++j) fields.push_back(csv::format(rk(i, j)));
    s += csv::join(fields);
  }
  return s;
}

std::vector<ModelKind> models_for(const std::string& choice, ModelSelector configured) {
  const std::string pick = choice.empty() ? (configured == ModelSelector::chemostat ? "chemostat"
                                             : configured == ModelSelector::direct  ? "direct"
                                                                                     : "both")
                                          : choice;
  if (pick == "chemostat") return {ModelKind::chemostat};
  if (pick == "direct") return {ModelKind::direct};
  return {ModelKind::direct, ModelKind::chemostat};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemostat to direct-competition reduction toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for sweep rows and study arms")
      ->check(CLI::Range(1, 1024));

  std::string config_path, out_path, candidate_path, model_choice, output_override;
  double tol = 1e-3;

  auto* run_cmd = app.add_subcommand("run", "Execute the experiment described by a config");
  run_cmd->add_option("--config", config_path, "JSON config")->required();
  run_cmd->add_option("--output", output_override, "Override the configured output directory");

  auto* reduce_cmd = app.add_subcommand("reduce", "Write the reduced competition kernel c as CSV");
  reduce_cmd->add_option("--config", config_path, "JSON config")->required();
  reduce_cmd->add_option("--out", out_path, "Destination CSV")->required();

  auto* verify_cmd = app.add_subcommand("verify-esd", "Check a candidate steady distribution");
  verify_cmd->add_option("--config", config_path, "JSON config")->required();
  verify_cmd->add_option("--candidate", candidate_path, "CSV with columns x,density")->required();
  verify_cmd->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--model", model_choice, "direct, chemostat or both")
      ->check(CLI::IsMember({"direct", "chemostat", "both"}));

  auto* find_cmd = app.add_subcommand("find-esd", "Run the configured model and extract a grid ESD");
  find_cmd->add_option("--config", config_path, "JSON config")->required();
  find_cmd->add_option("--out", out_path, "Destination candidate CSV")->required();
  find_cmd->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);
  find_cmd->add_option("--model", model_choice, "direct or chemostat")
      ->check(CLI::IsMember({"direct", "chemostat"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  try {
    RunConfig config = load_config(config_path);

    if (*run_cmd) {
      if (!output_override.empty()) config.output_dir = output_override;
      const auto files = run_experiment(config, threads);
      std::cout << "wrote " << files.size() << " files to " << config.output_dir.string() << " (config "
                << config_hash(config) << ")\n";
      return ok;
    }

    const Setup setup = build_setup(config);

    if (*reduce_cmd) {
      write_text(out_path, kernel_csv(setup.kernel));
      return ok;
    }

    if (*verify_cmd) {
      const ESDCandidate cand = load_esd_candidate(candidate_path, setup.coeffs.grid_x);
      bool all_pass = true;
      std::cout << "model," << ESDReport::csv_header();
      for (ModelKind m : models_for(model_choice, config.model)) {
        const ESDReport r = m == ModelKind::direct ? esd_verify(cand, setup.coeffs, setup.kernel, tol)
                                                   : esd_verify_chemostat(cand, setup.coeffs, config.scales, tol);
        std::cout << to_string(m) << ',' << r.csv_row();
        all_pass = all_pass && r.pass;
      }
      return all_pass ? ok : verdict_failed;
    }

    if (*find_cmd) {
      const ModelKind m = model_choice == "chemostat" ? ModelKind::chemostat : ModelKind::direct;
      RunSettings settings;
      settings.t_end = config.time.t_end;
      settings.dt = config.time.dt;
      settings.sample_every = config.time.sample_every;
      State init = setup.initial;
      if (m == ModelKind::direct) init.R.resize(0);
      const auto traj = run(m, setup.coeffs, setup.kernel, config.scales, init, settings);
      const auto peaks = peak_count(traj.final_state().n, setup.coeffs.grid_x, config.peak_threshold);
      const ESDCandidate esd = esd_find(peaks.indices, setup.coeffs, setup.kernel, m, config.scales, tol);
      const std::filesystem::path dest(out_path);
      if (dest.has_parent_path()) std::filesystem::create_directories(dest.parent_path());
      write_esd_candidate(out_path, esd, setup.coeffs.grid_x);
      const ESDReport r = m == ModelKind::direct ? esd_verify(esd, setup.coeffs, setup.kernel, tol)
                                                 : esd_verify_chemostat(esd, setup.coeffs, config.scales, tol);
      std::cout << ESDReport::csv_header() << r.csv_row();
      return r.pass ? ok : verdict_failed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const BlowUpError& e) {
    std::cerr << "numerical blow-up at t=" << e.time() << ": " << e.what() << '\n';
    return blow_up;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return io_error;
  } catch (const InfeasibleSupport& e) {
    std::cerr << "no steady distribution: " << e.what() << '\n';
    return verdict_failed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return verdict_failed;
  }
  return ok;
}
