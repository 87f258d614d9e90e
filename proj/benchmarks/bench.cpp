#include <benchmark/benchmark.h>

#include "mbounds/closed_form.hpp"
#include "mbounds/inference.hpp"
#include "mbounds/lp.hpp"
#include "mbounds/oracle.hpp"

namespace {

using namespace mbounds;

const ObservedDistribution kDist = ObservedDistribution::analytic({.4, .3, .2, .1}, {.1, .2, .3, .4});

void BM_ClosedFormNone(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bounds_no_assumption(kDist, 1));
}
BENCHMARK(BM_ClosedFormNone);

void BM_ClosedFormMmr(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bounds_mmr(kDist, 1));
}
BENCHMARK(BM_ClosedFormMmr);

void BM_LpBounds(benchmark::State& state) {
  const EstimandSpec spec{1, static_cast<Assumptions>(state.range(0)), 1};
  for (auto _ : state) benchmark::DoNotOptimize(anie_bounds_lp(kDist, spec));
}
BENCHMARK(BM_LpBounds)->DenseRange(0, 2);

void BM_ClrBounds(benchmark::State& state) {
  CellCounts c;
  c.n = {400, 300, 200, 100, 100, 200, 300, 400};
  InferenceConfig config;
  config.draws = static_cast<std::size_t>(state.range(0));
  const EstimandSpec spec{1, Assumptions::mmr, 1};
  for (auto _ : state) benchmark::DoNotOptimize(clr_bounds(c, spec, config));
}
BENCHMARK(BM_ClrBounds)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Soundness(benchmark::State& state) {
  Rng rng(1);
  const EstimandSpec spec{1, Assumptions::mmr_pos_mediator, 1};
  for (auto _ : state) {
    const auto pop = random_population(rng, spec);
    benchmark::DoNotOptimize(soundness_check(pop, spec));
  }
}
BENCHMARK(BM_Soundness);

void BM_Sharpness(benchmark::State& state) {
  const EstimandSpec spec{1, Assumptions::mmr, 1};
  for (auto _ : state) benchmark::DoNotOptimize(sharpness_check(kDist, spec));
}
BENCHMARK(BM_Sharpness);

}  // namespace

BENCHMARK_MAIN();
