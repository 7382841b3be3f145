#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "odbguard/dpmixreg.hpp"

using namespace odbguard;

namespace {

void BM_Indicators(benchmark::State& state) {
  const auto records = bench::mixed_records(static_cast<std::size_t>(state.range(0)));
  std::vector<MixtureComponent> comps(static_cast<std::size_t>(state.range(1)));
  for (std::size_t j = 0; j < comps.size(); ++j) {
    comps[j] = {1.0 / static_cast<double>(comps.size()), {0.1 * static_cast<double>(j), 0.0, 0.0}, 0.5};
  }
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_indicators(records, comps, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Indicators)->Args({6000, 30})->Args({6000, 5})->Args({500, 1});

void BM_ComponentParams(benchmark::State& state) {
  const auto stats = summarize(bench::mixed_records(1000));
  HyperParams hp;
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_component_params(stats, hp, rng));
}
BENCHMARK(BM_ComponentParams);

// Whole sweeps; reported per sweep.
void BM_GibbsSweeps(benchmark::State& state) {
  const auto records = bench::mixed_records(static_cast<std::size_t>(state.range(0)));
  HyperParams hp;
  hp.n_iter = 50;
  hp.burn_in = 0;
  hp.j_max = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fit(records, hp));
  state.SetItemsProcessed(state.iterations() * hp.n_iter);
}
BENCHMARK(BM_GibbsSweeps)->Args({6000, 30})->Args({500, 1})->Unit(benchmark::kMillisecond);

}  // namespace
