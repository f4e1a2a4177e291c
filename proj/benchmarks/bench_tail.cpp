#include <benchmark/benchmark.h>

#include "fusionkit/normal.hpp"
#include "fusionkit/rng.hpp"
#include "fusionkit/truncated_normal.hpp"

using namespace fusionkit;

namespace {

void BM_mills_ratio(benchmark::State& state) {
  double t = -static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mills_ratio(t));
  }
}
BENCHMARK(BM_mills_ratio)->Arg(1)->Arg(10)->Arg(30);

void BM_tn_moments(benchmark::State& state) {
  double m = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tn_moments(m, 1.0));
    m = -m;
  }
}
BENCHMARK(BM_tn_moments);

void BM_tn_sample_tail(benchmark::State& state) {
  Rng rng(1);
  const TruncatedNormalSpec spec{0.0, 1.0, static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(tn_sample(spec, rng));
}
BENCHMARK(BM_tn_sample_tail)->Arg(0)->Arg(8);

void BM_norm_quantile(benchmark::State& state) {
  double p = 0.123;
  for (auto _ : state) {
    benchmark::DoNotOptimize(norm_quantile(p));
    p = p < 0.9 ? p + 0.1 : 0.123;
  }
}
BENCHMARK(BM_norm_quantile);

}  // namespace

BENCHMARK_MAIN();
