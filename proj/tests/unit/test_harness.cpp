#include <cmath>
#include <regex>

#include <doctest.h>
#include <json.hpp>

#include "chemred/csv.hpp"
#include "chemred/errors.hpp"
#include "support.hpp"

using namespace chemred;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(CHEMRED_SOURCE_DIR) / "configs";

std::string small_config(const std::string& experiment, const std::string& extra = "",
                         const std::string& model = "both") {
  return R"({
    "model": ")" + model + R"(",
    "grid": {"x": {"min": -2, "max": 2, "points": 81}, "y": {"min": -2, "max": 2, "points": 81}},
    "coefficients": {"type": "gaussian", "sigma_K": 0.5, "sigma_in": 0.5, "M_in": 1, "m": 1},
    "scales": {"epsilon": 0.1, "mu": 0.005},
    "initial": {"center": -0.8, "variance": 0.005, "mass": 1},
    "time": {"t_end": 0.5, "dt": 0.002, "sample_every": 25},
    "experiment": )" + experiment + extra + "}";
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("shipped sweep config") {
  const auto cfg = load_config(kConfigs / "paper_fig1.json");
  const auto* sweep = std::get_if<EpsilonSweep>(&cfg.experiment);
  REQUIRE(sweep);
  CHECK(sweep->epsilons == std::vector<double>{0.1, 0.001});
  const auto& g = std::get<GaussianCoefficientSpec>(cfg.coefficients);
  CHECK(g.m == 1.0);
  CHECK(g.M_in == 1.0);
  CHECK(g.sigma_K == 0.5);
  CHECK(cfg.scales.mu == 0.005);
  for (const char* name : {"paper_fig0.json", "paper_fig2.json", "branching_small_mu.json"}) {
    CHECK_NOTHROW(load_config(kConfigs / name));
  }
}

TEST_CASE("validation errors name the field") {
  std::string cfg = small_config(R"({"type": "single"})");
  CHECK(message_of(std::regex_replace(cfg, std::regex("\"epsilon\": 0.1"), "\"epsilon\": 0")).find("epsilon must be positive") !=
        std::string::npos);
  const auto neg = message_of(std::regex_replace(cfg, std::regex("\"sigma_K\": 0.5"), "\"sigma_K\": -0.5"));
  CHECK(neg.find("coefficients.sigma_K") != std::string::npos);
  const auto unknown = message_of(std::regex_replace(cfg, std::regex("\"mu\": 0.005"), "\"mu\": 0.005, \"nu\": 1"));
  CHECK(unknown.find("scales.nu") != std::string::npos);
  CHECK(unknown.find("unknown key 'nu'") != std::string::npos);

  // Every violation is listed, not just the first.
  std::string many = std::regex_replace(cfg, std::regex("\"points\": 81"), "\"points\": 2");
  many = std::regex_replace(many, std::regex("\"dt\": 0.002"), "\"dt\": -1");
  const auto all = message_of(many);
  CHECK(all.find("grid.x.points") != std::string::npos);
  CHECK(all.find("grid.y.points") != std::string::npos);
  CHECK(all.find("time.dt") != std::string::npos);

  const auto decreasing = message_of(small_config(R"({"type": "epsilon_sweep", "epsilons": [0.01, 0.1]})"));
  CHECK(decreasing.find("strictly decreasing") != std::string::npos);
  const auto missing = message_of(small_config(R"({"type": "single"})", R"(, "esd_candidate": "no_such_file.csv")"));
  CHECK(missing.find("file not found") != std::string::npos);
  const auto nonfinite = message_of(std::regex_replace(cfg, std::regex("\"center\": -0.8"), "\"center\": \"x\""));
  CHECK(nonfinite.find("initial.center") != std::string::npos);
}

TEST_CASE("parse errors carry the line") {
  const auto msg = message_of("{\n  \"model\": \"both\",\n  \"grid\": oops\n}");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK_THROWS_AS(load_config(kConfigs / "does_not_exist.json"), IoError);
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = parse_config(small_config(R"({"type": "single"})"));
  const auto b = parse_config(small_config(R"({"type": "single"})", R"(, "comment": "ignored")"));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  const auto c = parse_config(std::regex_replace(small_config(R"({"type": "single"})"), std::regex("\"mu\": 0.005"), "\"mu\": 0.004"));
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("sweep rows are ordered, independent and isolate failures") {
  auto cfg = parse_config(small_config(R"({"type": "epsilon_sweep", "epsilons": [0.1, 0.05, 1e-200]})"));
  const auto seq = run_epsilon_sweep(cfg, 1);
  const auto par = run_epsilon_sweep(cfg, 3);
  REQUIRE(seq.rows.size() == 3);
  CHECK(seq.rows[0].epsilon == 0.1);
  CHECK(seq.rows[1].epsilon == 0.05);
  CHECK(seq.rows[0].error.empty());
  CHECK(seq.rows[1].error.empty());
  CHECK_FALSE(seq.rows[2].error.empty());
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(seq.rows[i].l1_distance == par.rows[i].l1_distance);
    CHECK(seq.rows[i].rel_error_R == par.rows[i].rel_error_R);
    CHECK(seq.rows[i].mass_chemostat == par.rows[i].mass_chemostat);
    CHECK(seq.comparisons[i].chemostat.final_state().n == par.comparisons[i].chemostat.final_state().n);
  }
  CHECK(std::isfinite(seq.rows[0].seconds));
  CHECK(sweep_csv_row(seq.rows[2]).find(",,,,,,") != std::string::npos);
}

TEST_CASE("model comparison on the standard setup") {
  auto cfg = load_config(kConfigs / "paper_fig1.json");
  cfg.experiment = SingleExperiment{};
  cfg.scales.epsilon = 0.1;
  const auto coarse = run_model_comparison(cfg);
  CHECK(coarse.relative_mass_gap >= 0.10);
  CHECK(coarse.relative_mass_gap <= 0.40);
  cfg.scales.epsilon = 0.001;
  const auto fine = run_model_comparison(cfg);
  CHECK(fine.l1_distance <= 0.05 * mass(fine.chemostat.final_state().n, TraitGrid::uniform(-2, 2, 201)));
}

TEST_CASE("without uptake both models coincide") {
  const auto dir = testing::scratch("harness_k0");
  const auto g = TraitGrid::uniform(-2.0, 2.0, 41);
  std::string growth = "x,a\n", resource = "y,m,R_in\n", uptake = "x";
  for (std::size_t j = 0; j < 41; ++j) uptake += "," + csv::format(g.node(j));
  uptake += "\n";
  for (std::size_t i = 0; i < 41; ++i) {
    const double x = g.node(i);
    growth += csv::join({csv::format(x), csv::format(1.0 - x * x)});
    resource += csv::join({csv::format(x), "1", "1"});
    uptake += csv::format(x);
    for (std::size_t j = 0; j < 41; ++j) uptake += ",0";
    uptake += "\n";
  }
  testing::write_file(dir / "growth.csv", growth);
  testing::write_file(dir / "resource.csv", resource);
  testing::write_file(dir / "uptake.csv", uptake);
  testing::write_file(dir / "cfg.json", R"({
    "grid": {"x": {"min": -2, "max": 2, "points": 41}, "y": {"min": -2, "max": 2, "points": 41}},
    "coefficients": {"type": "csv", "growth": "growth.csv", "resource": "resource.csv", "uptake": "uptake.csv"},
    "scales": {"epsilon": 0.1, "mu": 0.01},
    "time": {"t_end": 0.2, "dt": 0.001}
  })");
  const auto cfg = load_config(dir / "cfg.json");
  const auto cmp = run_model_comparison(cfg);
  CHECK(cmp.l1_distance <= 1e-10);
}

TEST_CASE("ratio study flags ratio-preserving pairs") {
  const auto cfg = parse_config(small_config(
      R"({"type": "ratio_study", "pairs": [{"reference": {"m": 1, "M_in": 1}, "variant": {"m": 10, "M_in": 10}},
                                           {"reference": {"m": 1, "M_in": 1}, "variant": {"m": 1.5, "M_in": 1}}]})",
      "", "chemostat"));
  const auto report = run_ratio_study(cfg, 2);
  REQUIRE(report.pairs.size() == 2);
  CHECK(report.pairs[0].ratio_preserved);
  CHECK_FALSE(report.pairs[1].ratio_preserved);
  CHECK(report.pairs[0].kernel_rel_difference <= 1e-14);
  CHECK(report.pairs[1].kernel_rel_difference == doctest::Approx(1.0 / 3.0));
  CHECK(report.pairs[1].l1_distance > 3.0 * report.pairs[0].l1_distance);
}

TEST_CASE("emitted files are deterministic, complete and round-trip") {
  const auto dir = testing::scratch("harness_emit");
  auto cfg = parse_config(small_config(R"({"type": "branching"})"));
  cfg.output_dir = dir / "a";
  const auto files = run_experiment(cfg, 2);
  cfg.output_dir = dir / "b";
  run_experiment(cfg, 1);
  for (const auto& f : files) CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));

  const auto heat = csv::read(dir / "a" / "density_heatmap.csv");
  CHECK(heat.header.size() == 82);
  CHECK(csv::parse(heat.header[1]) == -2.0);
  CHECK(heat.rows.size() == 11);
  CHECK(csv::parse(heat.rows.back()[0]) == doctest::Approx(0.5));

  // Round trip against the in-memory trajectory.
  const auto result = run_branching(cfg, 1);
  const auto& last = result.chemostat->final_state().n;
  for (Eigen::Index i = 0; i < last.size(); ++i) CHECK(csv::parse(heat.rows.back()[static_cast<std::size_t>(i) + 1]) == last[i]);

  const auto ts = csv::read(dir / "a" / "timeseries.csv");
  CHECK(ts.header == std::vector<std::string>{"t", "mass", "resource_gap", "S_cr", "S_dc"});
  CHECK(ts.rows[0][3].empty());
  const auto tsd = csv::read(dir / "a" / "timeseries_direct.csv");
  CHECK(tsd.rows[0][2].empty());
  CHECK(std::filesystem::exists(dir / "a" / "peaks.csv"));

  const auto manifest = nlohmann::json::parse(testing::read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["config_hash"] == config_hash(cfg));
  std::vector<std::string> listed;
  for (const auto& a : manifest["artifacts"]) {
    listed.push_back(a["file"]);
    CHECK(a["config_hash"] == config_hash(cfg));
  }
  CHECK(listed.size() + 1 == files.size());
}

TEST_CASE("sweep output schema") {
  const auto dir = testing::scratch("harness_sweep");
  auto cfg = parse_config(small_config(R"({"type": "epsilon_sweep", "epsilons": [0.1, 0.01]})"));
  cfg.output_dir = dir;
  run_experiment(cfg, 2);
  const auto t = csv::read(dir / "sweep.csv");
  CHECK(t.header == std::vector<std::string>{"epsilon", "rel_error_R", "l1_distance", "peaks_chemostat", "peaks_direct",
                                             "mass_chemostat", "mass_direct", "seconds"});
  REQUIRE(t.rows.size() == 2);
  CHECK(csv::parse(t.rows[0][0]) == 0.1);
  CHECK(std::filesystem::exists(dir / "mass_eps0.01.csv"));
}

TEST_CASE("attached ESD fills the Lyapunov columns") {
  const auto dir = testing::scratch("harness_esd");
  auto cfg = parse_config(small_config(R"({"type": "single"})"));
  const auto setup = build_setup(cfg);
  const auto esd = esd_find({40}, setup.coeffs, setup.kernel, ModelKind::direct, ScaleParams{}, 1e-10);
  write_esd_candidate(dir / "esd.csv", esd, setup.coeffs.grid_x);
  const auto back = load_esd_candidate(dir / "esd.csv", setup.coeffs.grid_x);
  CHECK(back.support == esd.support);
  CHECK(back.density == esd.density);

  cfg.esd_candidate = dir / "esd.csv";
  cfg.output_dir = dir / "out";
  run_experiment(cfg, 1);
  const auto ts = csv::read(dir / "out" / "timeseries.csv");
  CHECK_FALSE(ts.rows[1][3].empty());
  CHECK(ts.rows[1][4].empty());
  const auto tsd = csv::read(dir / "out" / "timeseries_direct.csv");
  CHECK_FALSE(tsd.rows[1][4].empty());

  testing::write_file(dir / "off.csv", "x,density\n0.01,1\n");
  CHECK_THROWS_AS(load_esd_candidate(dir / "off.csv", setup.coeffs.grid_x), std::invalid_argument);
}

TEST_CASE("output directory failures raise IoError") {
  const auto dir = testing::scratch("harness_io");
  testing::write_file(dir / "blocker", "x");
  auto cfg = parse_config(small_config(R"({"type": "single"})"));
  cfg.output_dir = dir / "blocker" / "sub";
  CHECK_THROWS_AS(run_experiment(cfg, 1), IoError);
}

TEST_CASE("parallel_for propagates job errors") {
  std::vector<int> hit(6, 0);
  parallel_for(6, 3, [&](std::size_t i) { hit[i] = 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 6);
  CHECK_THROWS_AS(parallel_for(4, 2, [](std::size_t i) { if (i == 2) throw std::runtime_error("x"); }), std::runtime_error);
}

}
