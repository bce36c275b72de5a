#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include "chemred/csv.hpp"
#include "chemred/errors.hpp"
#include "chemred/harness.hpp"

namespace chemred {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Setup build_setup(const RunConfig& config, const std::optional<RatioArm>& arm) {
  const auto gx = TraitGrid::uniform(config.grid_x.min, config.grid_x.max, config.grid_x.points);
  const auto gy = TraitGrid::uniform(config.grid_y.min, config.grid_y.max, config.grid_y.points);
  Coefficients coeffs = [&] {
    if (const auto* g = std::get_if<GaussianCoefficientSpec>(&config.coefficients)) {
      NormalizedGaussian spec{g->sigma_K, g->sigma_in, arm ? arm->M_in : g->M_in};
      return build_gaussian_coefficients(spec, arm ? arm->m : g->m, gx, gy);
    }
    if (arm) throw ConfigError("ratio arms need gaussian coefficients");
    const auto& f = std::get<CsvCoefficientSpec>(config.coefficients);
    auto loaded = load_coefficients_csv(f.growth, f.resource, f.uptake);
    if (!loaded.grid_x.same_as(gx) || !loaded.grid_y.same_as(gy)) {
      throw ConfigError("coefficient tables do not match the configured grids");
    }
    return loaded;
  }();
  auto kernel = reduce_kernel(coeffs);
  State init;
  init.n = initial_condition_gaussian(config.initial.center, config.initial.variance, config.initial.mass, gx);
  init.R = config.initial.resource_factor * coeffs.supply;
  init.t = 0.0;
  return Setup{std::move(coeffs), std::move(kernel), std::move(init)};
}

namespace {

RunSettings settings_of(const RunConfig& config) {
  RunSettings s;
  s.t_end = config.time.t_end;
  s.dt = config.time.dt;
  s.sample_every = config.time.sample_every;
  return s;
}

SampleProbe make_probe(ModelKind model, const std::optional<ESDCandidate>& esd, const Setup& setup,
                       double epsilon) {
  if (!esd) return {};
  if (model == ModelKind::direct) {
    return [esd = *esd, &setup](const State& s, SampleDiagnostics& d) {
      d.lyapunov_dc = lyapunov_dc(s.n, esd, setup.coeffs.grid_x);
    };
  }
  ESDCandidate with_resource = *esd;
  with_resource.resource = steady_resource(esd->density, setup.coeffs, epsilon);
  return [esd = std::move(with_resource), &setup](const State& s, SampleDiagnostics& d) {
    d.lyapunov_cr = lyapunov_cr(s, esd, setup.coeffs);
  };
}

Trajectory run_one(ModelKind model, const RunConfig& config, const Setup& setup,
                   const std::optional<ESDCandidate>& esd) {
  State init = setup.initial;
  if (model == ModelKind::direct) init.R.resize(0);
  return run(model, setup.coeffs, setup.kernel, config.scales, init, settings_of(config),
             make_probe(model, esd, setup, config.scales.epsilon));
}

std::optional<ESDCandidate> attached_esd(const RunConfig& config, const Setup& setup) {
  if (!config.esd_candidate) return std::nullopt;
  return load_esd_candidate(*config.esd_candidate, setup.coeffs.grid_x);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ComparisonResult run_model_comparison(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Setup setup = build_setup(config);
  const auto esd = attached_esd(config, setup);
  ComparisonResult r;
  r.epsilon = config.scales.epsilon;
  r.chemostat = run_one(ModelKind::chemostat, config, setup, esd);
  r.direct = run_one(ModelKind::direct, config, setup, esd);
  const State& fc = r.chemostat.final_state();
  const State& fd = r.direct.final_state();
  r.rel_error_R = rel_error_R(fc.R, setup.coeffs.supply);
  r.l1_distance = l1_distance(fc.n, fd.n, setup.coeffs.grid_x);
  const double mc = mass(fc.n, setup.coeffs.grid_x);
  const double md = mass(fd.n, setup.coeffs.grid_x);
  r.relative_mass_gap = mc > 0.0 ? (mc - md) / mc : 0.0;
  r.seconds = seconds_since(start);
  return r;
}

SweepResult run_epsilon_sweep(const RunConfig& config, int threads) {
  const auto* sweep = std::get_if<EpsilonSweep>(&config.experiment);
  if (!sweep) throw ConfigError("run_epsilon_sweep: experiment is not an epsilon sweep");
  std::vector<double> eps = sweep->epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());

  SweepResult result;
  result.rows.resize(eps.size());
  result.comparisons.resize(eps.size());
  parallel_for(eps.size(), threads, [&](std::size_t i) {
    SweepRow& row = result.rows[i];
    row.epsilon = eps[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      RunConfig local = config;
      local.scales.epsilon = eps[i];
      ComparisonResult cmp = run_model_comparison(local);
      const Vector& nc = cmp.chemostat.final_state().n;
      const Vector& nd = cmp.direct.final_state().n;
      const auto gx = TraitGrid::uniform(config.grid_x.min, config.grid_x.max, config.grid_x.points);
      row.rel_error_R = cmp.rel_error_R;
      row.l1_distance = cmp.l1_distance;
      row.peaks_chemostat = peak_count(nc, gx, config.peak_threshold).count();
      row.peaks_direct = peak_count(nd, gx, config.peak_threshold).count();
      row.mass_chemostat = mass(nc, gx);
      row.mass_direct = mass(nd, gx);
      result.comparisons[i] = std::move(cmp);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.seconds = seconds_since(start);
  });
  return result;
}

RatioReport run_ratio_study(const RunConfig& config, int threads) {
  const auto* study = std::get_if<RatioStudy>(&config.experiment);
  if (!study) throw ConfigError("run_ratio_study: experiment is not a ratio study");
  std::vector<RatioArm> arms;
  for (const auto& p : study->pairs) {
    arms.push_back(p.reference);
    arms.push_back(p.variant);
  }
  std::vector<Vector> finals(arms.size());
  std::vector<Matrix> kernels(arms.size());
  parallel_for(arms.size(), threads, [&](std::size_t i) {
    const Setup setup = build_setup(config, arms[i]);
    kernels[i] = setup.kernel.matrix();
    finals[i] = run_one(ModelKind::chemostat, config, setup, std::nullopt).final_state().n;
  });
  const auto gx = TraitGrid::uniform(config.grid_x.min, config.grid_x.max, config.grid_x.points);

  RatioReport report;
  for (std::size_t p = 0; p < study->pairs.size(); ++p) {
    const auto& pair = study->pairs[p];
    RatioPairResult r;
    r.pair = pair;
    const double q_ref = pair.reference.M_in / pair.reference.m;
    const double q_var = pair.variant.M_in / pair.variant.m;
    r.ratio_preserved = std::abs(q_ref - q_var) <= 1e-12 * std::abs(q_ref);
    r.reference_density = finals[2 * p];
    r.variant_density = finals[2 * p + 1];
    r.l1_distance = l1_distance(r.reference_density, r.variant_density, gx);
    r.reference_mass = mass(r.reference_density, gx);
    r.relative_distance = r.reference_mass > 0.0 ? r.l1_distance / r.reference_mass : 0.0;
    const Matrix& c_ref = kernels[2 * p];
    const double scale = c_ref.cwiseAbs().maxCoeff();
    r.kernel_rel_difference = scale > 0.0 ? (c_ref - kernels[2 * p + 1]).cwiseAbs().maxCoeff() / scale : 0.0;
    report.pairs.push_back(std::move(r));
  }
  return report;
}

BranchingResult run_branching(const RunConfig& config, int threads) {
  const Setup setup = build_setup(config);
  const auto esd = attached_esd(config, setup);
  std::vector<ModelKind> models;
  if (config.model != ModelSelector::direct) models.push_back(ModelKind::chemostat);
  if (config.model != ModelSelector::chemostat) models.push_back(ModelKind::direct);
  std::vector<std::optional<Trajectory>> out(models.size());
  parallel_for(models.size(), threads,
               [&](std::size_t i) { out[i] = run_one(models[i], config, setup, esd); });

  BranchingResult r;
  auto counts = [&](const Trajectory& t) {
    std::vector<std::size_t> c;
    for (const auto& s : t.states) c.push_back(peak_count(s.n, setup.coeffs.grid_x, config.peak_threshold).count());
    return c;
  };
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i] == ModelKind::chemostat) {
      r.chemostat = std::move(out[i]);
      r.peaks_chemostat = counts(*r.chemostat);
    } else {
      r.direct = std::move(out[i]);
      r.peaks_direct = counts(*r.direct);
    }
  }
  return r;
}

ESDCandidate load_esd_candidate(const std::filesystem::path& path, const TraitGrid& grid) {
  const auto table = csv::read(path);
  std::size_t cx = 0, cd = 0;
  try {
    cx = table.column("x");
    cd = table.column("density");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument(path.string() + ": candidate needs columns x,density");
  }
  Vector density = Vector::Zero(static_cast<Eigen::Index>(grid.size()));
  const double h = grid.size() > 1 ? grid.spacing() : 1.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double x = csv::parse(table.rows[r][cx]);
    const double d = csv::parse(table.rows[r][cd]);
    const std::size_t i = grid.nearest(x);
    if (std::abs(grid.node(i) - x) > 1e-6 * h) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(r + 2) + " x=" + table.rows[r][cx] +
                                  " is not a grid node");
    }
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(r + 2) + " has an invalid density");
    }
    density[static_cast<Eigen::Index>(i)] = d;
  }
  return ESDCandidate::from_density(std::move(density));
}

void write_esd_candidate(const std::filesystem::path& path, const ESDCandidate& esd, const TraitGrid& grid) {
  std::string text = "x,density\n";
  for (auto i : esd.support) {
    text += csv::join({csv::format(grid.node(i)), csv::format(esd.density[static_cast<Eigen::Index>(i)])});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !(out.flush())) throw IoError("cannot write " + path.string());
}

}  // namespace chemred
