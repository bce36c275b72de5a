#include <benchmark/benchmark.h>

#include "chemred/diagnostics.hpp"
#include "chemred/harness.hpp"

using namespace chemred;

namespace {

Coefficients standard_coeffs(std::size_t points) {
  const auto g = TraitGrid::uniform(-2.0, 2.0, points);
  return build_gaussian_coefficients(NormalizedGaussian{}, 1.0, g, g);
}

void BM_ReduceKernel(benchmark::State& st) {
  const auto c = standard_coeffs(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reduce_kernel(c));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_ReduceKernel)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNCubed);

void BM_ChemostatStep(benchmark::State& st) {
  const auto c = standard_coeffs(static_cast<std::size_t>(st.range(0)));
  ChemostatStepper stepper(c, ScaleParams{0.01, 0.005});
  State s{initial_condition_gaussian(-0.8, 0.005, 1.0, c.grid_x), c.supply, 0.0};
  for (auto _ : st) benchmark::DoNotOptimize(stepper.step(s, 1e-5));
}
BENCHMARK(BM_ChemostatStep)->Arg(101)->Arg(201)->Arg(401);

void BM_DirectStep(benchmark::State& st) {
  const auto c = standard_coeffs(static_cast<std::size_t>(st.range(0)));
  const auto rk = reduce_kernel(c);
  DirectStepper stepper(rk, c, ScaleParams{1.0, 0.005});
  State s{initial_condition_gaussian(-0.8, 0.005, 1.0, c.grid_x), {}, 0.0};
  for (auto _ : st) benchmark::DoNotOptimize(stepper.step(s, 1e-5));
}
BENCHMARK(BM_DirectStep)->Arg(101)->Arg(201)->Arg(401);

void BM_WeightedSpectrum(benchmark::State& st) {
  const auto rk = reduce_kernel(standard_coeffs(static_cast<std::size_t>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(weighted_spectrum(rk));
}
BENCHMARK(BM_WeightedSpectrum)->Arg(101)->Arg(201);

void BM_EsdFindDirect(benchmark::State& st) {
  const auto c = standard_coeffs(201);
  const auto rk = reduce_kernel(c);
  for (auto _ : st) {
    benchmark::DoNotOptimize(esd_find({100}, c, rk, ModelKind::direct, ScaleParams{}, 1e-9));
  }
}
BENCHMARK(BM_EsdFindDirect);

}  // namespace

BENCHMARK_MAIN();
