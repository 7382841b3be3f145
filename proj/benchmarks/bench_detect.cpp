#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "odbguard/detect.hpp"
#include "odbguard/dpmixreg.hpp"

using namespace odbguard;

namespace {

const PosteriorSamples& model() {
  static const PosteriorSamples post = [] {
    HyperParams hp;
    hp.n_iter = 2000;
    hp.burn_in = 500;
    hp.seed = 3;
    return fit(bench::mixed_records(2000), hp);
  }();
  return post;
}

void BM_PredictiveSamples(benchmark::State& state) {
  const PosteriorPredictive predictive(model());
  Rng rng(4);
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predictive.sample({0.5, -0.1, 9.8}, count, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictiveSamples)->Arg(2000)->Arg(10000);

void BM_DetectTrip(benchmark::State& state) {
  const PosteriorPredictive predictive(model());
  const auto records = bench::mixed_records(600, 9);
  for (auto _ : state) benchmark::DoNotOptimize(detect_trip(records, predictive, 0.95, 2000, 5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_DetectTrip)->Unit(benchmark::kMillisecond);

}  // namespace
