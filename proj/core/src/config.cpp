#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "chemred/errors.hpp"
#include "chemred/harness.hpp"

namespace chemred {

namespace {

using nlohmann::json;

// Collects every problem before reporting, so one run shows them all.
class Checker {
 public:
  explicit Checker(std::filesystem::path base) : base_(std::move(base)) {}

  void fail(const std::string& path, const std::string& message) {
    errors_.push_back(path.empty() ? message : path + ": " + message);
  }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
      if (!keys.count(key)) fail(join(path, key), "unknown key '" + key + "'");
    }
    return true;
  }

  const json* member(const json& j, const std::string& path, const char* key, bool required) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(join(path, key), "missing required key");
      return nullptr;
    }
    return &*it;
  }

  // Reads a finite number into `out` when present.
  bool number(const json& j, const std::string& path, const char* key, double& out, bool required) {
    const json* v = member(j, path, key, required);
    if (!v) return false;
    if (!v->is_number()) {
      fail(join(path, key), "expected a number");
      return false;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x)) {
      fail(join(path, key), "must be finite");
      return false;
    }
    out = x;
    return true;
  }

  void positive(const json& j, const std::string& path, const char* key, double& out, bool required,
                const std::string& label = {}) {
    if (number(j, path, key, out, required) && !(out > 0.0)) {
      fail(join(path, key), (label.empty() ? std::string(key) : label) + " must be positive");
    }
  }

  bool integer(const json& j, const std::string& path, const char* key, long long& out, bool required) {
    const json* v = member(j, path, key, required);
    if (!v) return false;
    if (!v->is_number_integer()) {
      fail(join(path, key), "expected an integer");
      return false;
    }
    out = v->get<long long>();
    return true;
  }

  bool string(const json& j, const std::string& path, const char* key, std::string& out, bool required) {
    const json* v = member(j, path, key, required);
    if (!v) return false;
    if (!v->is_string()) {
      fail(join(path, key), "expected a string");
      return false;
    }
    out = v->get<std::string>();
    return true;
  }

  std::filesystem::path existing_file(const json& j, const std::string& path, const char* key,
                                      bool required) {
    std::string s;
    if (!string(j, path, key, s, required)) return {};
    std::filesystem::path p(s);
    if (p.is_relative()) p = base_ / p;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) fail(join(path, key), "file not found: " + p.string());
    return p;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::filesystem::path base_;
  std::vector<std::string> errors_;
};

GridSpec read_grid(Checker& ck, const json& j, const std::string& path) {
  GridSpec g;
  if (!ck.object(j, path, {"min", "max", "points"})) return g;
  const bool lo = ck.number(j, path, "min", g.min, true);
  const bool hi = ck.number(j, path, "max", g.max, true);
  if (lo && hi && !(g.max > g.min)) ck.fail(path, "max must exceed min");
  long long points = 0;
  if (ck.integer(j, path, "points", points, true)) {
    if (points < 3) {
      ck.fail(Checker::join(path, "points"), "must be at least 3");
    } else {
      g.points = static_cast<std::size_t>(points);
    }
  }
  return g;
}

CoefficientSpec read_coefficients(Checker& ck, const json& j, const std::string& path) {
  std::string type;
  if (!j.is_object()) {
    ck.fail(path, "expected an object");
    return GaussianCoefficientSpec{};
  }
  ck.string(j, path, "type", type, true);
  if (type == "csv") {
    CsvCoefficientSpec c;
    ck.object(j, path, {"type", "growth", "resource", "uptake"});
    c.growth = ck.existing_file(j, path, "growth", true);
    c.resource = ck.existing_file(j, path, "resource", true);
    c.uptake = ck.existing_file(j, path, "uptake", true);
    return c;
  }
  GaussianCoefficientSpec g;
  if (type != "gaussian" && !type.empty()) {
    ck.fail(Checker::join(path, "type"), "must be 'gaussian' or 'csv'");
  }
  ck.object(j, path, {"type", "sigma_K", "sigma_in", "M_in", "m"});
  ck.positive(j, path, "sigma_K", g.sigma_K, false);
  ck.positive(j, path, "sigma_in", g.sigma_in, false);
  ck.positive(j, path, "M_in", g.M_in, false);
  ck.positive(j, path, "m", g.m, false);
  return g;
}

RatioArm read_arm(Checker& ck, const json& j, const std::string& path) {
  RatioArm arm;
  if (!ck.object(j, path, {"m", "M_in"})) return arm;
  ck.positive(j, path, "m", arm.m, true);
  ck.positive(j, path, "M_in", arm.M_in, true);
  return arm;
}

Experiment read_experiment(Checker& ck, const json& j, const std::string& path) {
  if (!j.is_object()) {
    ck.fail(path, "expected an object");
    return SingleExperiment{};
  }
  std::string type;
  ck.string(j, path, "type", type, true);
  if (type == "epsilon_sweep") {
    ck.object(j, path, {"type", "epsilons"});
    EpsilonSweep sweep;
    const json* list = ck.member(j, path, "epsilons", true);
    if (list && (!list->is_array() || list->empty())) {
      ck.fail(Checker::join(path, "epsilons"), "expected a nonempty array");
    } else if (list) {
      for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string p = Checker::join(path, "epsilons[" + std::to_string(i) + "]");
        const json& e = (*list)[i];
        if (!e.is_number() || !std::isfinite(e.get<double>())) {
          ck.fail(p, "expected a finite number");
          continue;
        }
        const double eps = e.get<double>();
        if (!(eps > 0.0)) ck.fail(p, "epsilon must be positive");
        if (!sweep.epsilons.empty() && !(eps < sweep.epsilons.back())) {
          ck.fail(p, "epsilon list must be strictly decreasing");
        }
        sweep.epsilons.push_back(eps);
      }
    }
    return sweep;
  }
  if (type == "ratio_study") {
    ck.object(j, path, {"type", "pairs"});
    RatioStudy study;
    const json* list = ck.member(j, path, "pairs", true);
    if (list && (!list->is_array() || list->empty())) {
      ck.fail(Checker::join(path, "pairs"), "expected a nonempty array");
    } else if (list) {
      for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string p = Checker::join(path, "pairs[" + std::to_string(i) + "]");
        const json& e = (*list)[i];
        RatioPair pair;
        if (ck.object(e, p, {"reference", "variant"})) {
          if (const json* r = ck.member(e, p, "reference", true)) pair.reference = read_arm(ck, *r, p + ".reference");
          if (const json* v = ck.member(e, p, "variant", true)) pair.variant = read_arm(ck, *v, p + ".variant");
        }
        study.pairs.push_back(pair);
      }
    }
    return study;
  }
  ck.object(j, path, {"type"});
  if (type == "branching") return BranchingExperiment{};
  if (type != "single" && !type.empty()) {
    ck.fail(Checker::join(path, "type"), "must be one of single, epsilon_sweep, ratio_study, branching");
  }
  return SingleExperiment{};
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const char* model_name(ModelSelector m) {
  switch (m) {
    case ModelSelector::chemostat: return "chemostat";
    case ModelSelector::direct: return "direct";
    default: return "both";
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    // Keep only the human part of the library message.
    if (auto pos = what.find(": syntax error"); pos != std::string::npos) what = what.substr(pos + 2);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + what);
  }

  Checker ck(base_dir);
  RunConfig cfg;
  if (!ck.object(root, "", {"comment", "model", "grid", "coefficients", "scales", "initial", "time",
                            "output", "experiment", "esd_candidate", "peak_threshold"})) {
    throw ConfigError("config: top level must be an object");
  }

  ck.string(root, "", "comment", cfg.comment, false);

  std::string model = "both";
  ck.string(root, "", "model", model, false);
  if (model == "chemostat") {
    cfg.model = ModelSelector::chemostat;
  } else if (model == "direct") {
    cfg.model = ModelSelector::direct;
  } else if (model == "both") {
    cfg.model = ModelSelector::both;
  } else {
    ck.fail("model", "must be chemostat, direct or both");
  }

  if (const json* e = ck.member(root, "", "experiment", false)) cfg.experiment = read_experiment(ck, *e, "experiment");
  const bool sweep = std::holds_alternative<EpsilonSweep>(cfg.experiment);

  if (const json* g = ck.member(root, "", "grid", true)) {
    if (ck.object(*g, "grid", {"x", "y"})) {
      if (const json* x = ck.member(*g, "grid", "x", true)) cfg.grid_x = read_grid(ck, *x, "grid.x");
      if (const json* y = ck.member(*g, "grid", "y", true)) cfg.grid_y = read_grid(ck, *y, "grid.y");
    }
  }

  if (const json* c = ck.member(root, "", "coefficients", false)) {
    cfg.coefficients = read_coefficients(ck, *c, "coefficients");
  }

  if (const json* s = ck.member(root, "", "scales", true)) {
    if (ck.object(*s, "scales", {"epsilon", "mu"})) {
      ck.positive(*s, "scales", "epsilon", cfg.scales.epsilon, !sweep, "epsilon");
      if (ck.number(*s, "scales", "mu", cfg.scales.mu, false) && cfg.scales.mu < 0.0) {
        ck.fail("scales.mu", "mu must be nonnegative");
      }
    }
  }

  if (const json* i = ck.member(root, "", "initial", false)) {
    if (ck.object(*i, "initial", {"center", "variance", "mass", "resource_factor"})) {
      ck.number(*i, "initial", "center", cfg.initial.center, false);
      ck.positive(*i, "initial", "variance", cfg.initial.variance, false);
      ck.positive(*i, "initial", "mass", cfg.initial.mass, false);
      if (ck.number(*i, "initial", "resource_factor", cfg.initial.resource_factor, false) &&
          cfg.initial.resource_factor < 0.0) {
        ck.fail("initial.resource_factor", "must be nonnegative");
      }
    }
  }

  if (const json* t = ck.member(root, "", "time", true)) {
    if (ck.object(*t, "time", {"t_end", "dt", "sample_every"})) {
      ck.positive(*t, "time", "t_end", cfg.time.t_end, true);
      ck.positive(*t, "time", "dt", cfg.time.dt, true);
      long long every = cfg.time.sample_every;
      if (ck.integer(*t, "time", "sample_every", every, false)) {
        if (every < 1 || every > 1'000'000'000) {
          ck.fail("time.sample_every", "must be a positive integer");
        } else {
          cfg.time.sample_every = static_cast<int>(every);
        }
      }
      if (cfg.time.dt > 0.0 && cfg.time.t_end > 0.0 && cfg.time.dt > cfg.time.t_end) {
        ck.fail("time.dt", "must not exceed t_end");
      }
    }
  }

  std::string out;
  if (ck.string(root, "", "output", out, false)) cfg.output_dir = out;

  if (ck.member(root, "", "esd_candidate", false)) {
    cfg.esd_candidate = ck.existing_file(root, "", "esd_candidate", false);
  }

  if (ck.number(root, "", "peak_threshold", cfg.peak_threshold, false) &&
      !(cfg.peak_threshold > 0.0 && cfg.peak_threshold < 1.0)) {
    ck.fail("peak_threshold", "must lie in (0, 1)");
  }

  if (sweep && cfg.model != ModelSelector::both) ck.fail("model", "epsilon_sweep requires model 'both'");
  if (std::holds_alternative<RatioStudy>(cfg.experiment) &&
      !std::holds_alternative<GaussianCoefficientSpec>(cfg.coefficients)) {
    ck.fail("coefficients.type", "ratio_study requires gaussian coefficients");
  }

  if (!ck.errors().empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : ck.errors()) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  if (sweep) cfg.scales.epsilon = std::get<EpsilonSweep>(cfg.experiment).epsilons.front();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string canonical_json(const RunConfig& c) {
  json j;
  j["model"] = model_name(c.model);
  auto grid = [](const GridSpec& g) { return json{{"min", g.min}, {"max", g.max}, {"points", g.points}}; };
  j["grid"] = {{"x", grid(c.grid_x)}, {"y", grid(c.grid_y)}};
  if (const auto* g = std::get_if<GaussianCoefficientSpec>(&c.coefficients)) {
    j["coefficients"] = {{"type", "gaussian"}, {"sigma_K", g->sigma_K}, {"sigma_in", g->sigma_in},
                         {"M_in", g->M_in}, {"m", g->m}};
  } else {
    const auto& f = std::get<CsvCoefficientSpec>(c.coefficients);
    j["coefficients"] = {{"type", "csv"}, {"growth", f.growth.generic_string()},
                         {"resource", f.resource.generic_string()}, {"uptake", f.uptake.generic_string()}};
  }
  j["scales"] = {{"epsilon", c.scales.epsilon}, {"mu", c.scales.mu}};
  j["initial"] = {{"center", c.initial.center}, {"variance", c.initial.variance}, {"mass", c.initial.mass},
                  {"resource_factor", c.initial.resource_factor}};
  j["time"] = {{"t_end", c.time.t_end}, {"dt", c.time.dt}, {"sample_every", c.time.sample_every}};
  j["peak_threshold"] = c.peak_threshold;
  if (c.esd_candidate) j["esd_candidate"] = c.esd_candidate->generic_string();
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SingleExperiment>) {
          j["experiment"] = {{"type", "single"}};
        } else if constexpr (std::is_same_v<T, BranchingExperiment>) {
          j["experiment"] = {{"type", "branching"}};
        } else if constexpr (std::is_same_v<T, EpsilonSweep>) {
          j["experiment"] = {{"type", "epsilon_sweep"}, {"epsilons", e.epsilons}};
        } else {
          json pairs = json::array();
          for (const auto& p : e.pairs) {
            pairs.push_back({{"reference", {{"m", p.reference.m}, {"M_in", p.reference.M_in}}},
                             {"variant", {{"m", p.variant.m}, {"M_in", p.variant.M_in}}}});
          }
          j["experiment"] = {{"type", "ratio_study"}, {"pairs", pairs}};
        }
      },
      c.experiment);
  // Output location and comment do not affect results and stay out of the hash.
  return j.dump();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace chemred
