#include <benchmark/benchmark.h>

#include "fusionkit/gaussian.hpp"
#include "fusionkit/mixtures.hpp"
#include "fusionkit/skew_normal.hpp"

using namespace fusionkit;

namespace {

StackedDataset make_sn_dataset(Index n) {
  SkewNormalParams p;
  p.dims = {1, 1, 1};
  p.mu = Vector::Zero(3);
  p.sigma = Matrix::Identity(3, 3);
  p.delta = Vector(3);
  p.delta << 1.0, 3.0, 5.0;
  const Matrix joint = sn_sample(p, n, 1);
  Matrix a(n / 2, 2), b(n - n / 2, 2);
  a = joint.topRows(n / 2).leftCols(2);
  b.col(0) = joint.bottomRows(n - n / 2).col(0);
  b.col(1) = joint.bottomRows(n - n / 2).col(2);
  return stack(a, b, default_block_spec({1, 1, 1}));
}

void BM_fit_gaussian(benchmark::State& state) {
  const StackedDataset ds = make_sn_dataset(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian(ds));
}
BENCHMARK(BM_fit_gaussian)->Arg(1000)->Arg(10000);

void BM_sn_em_iteration(benchmark::State& state) {
  const StackedDataset ds = make_sn_dataset(state.range(0));
  const SkewNormalParams init = sn_moment_init(ds);
  EMConfig config;
  config.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_sn_em(ds, init, config));
}
BENCHMARK(BM_sn_em_iteration)->Arg(1000)->Arg(10000);

void BM_gmm_fit(benchmark::State& state) {
  const StackedDataset ds = make_sn_dataset(state.range(0));
  EMConfig config;
  config.n_restarts = 1;
  config.max_iters = 25;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm_matching(ds, 2, config));
}
BENCHMARK(BM_gmm_fit)->Arg(2000);

}  // namespace
