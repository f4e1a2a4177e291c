#include <benchmark/benchmark.h>

#include "fusionkit/nn_index.hpp"
#include "fusionkit/rng.hpp"

using namespace fusionkit;

namespace {

void BM_kdtree_query(benchmark::State& state) {
  Rng rng(2);
  const Index n = state.range(0);
  const Matrix donors = rng.normal_matrix(n, 2);
  const Matrix queries = rng.normal_matrix(1024, 2);
  const KdTree tree(donors);
  Index q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.nearest(queries.row(q)));
    q = (q + 1) % queries.rows();
  }
}
BENCHMARK(BM_kdtree_query)->Arg(1000)->Arg(100000);

void BM_brute_query(benchmark::State& state) {
  Rng rng(2);
  const Index n = state.range(0);
  const Matrix donors = rng.normal_matrix(n, 2);
  const Matrix queries = rng.normal_matrix(1024, 2);
  Index q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn_brute(donors, queries.row(q)));
    q = (q + 1) % queries.rows();
  }
}
BENCHMARK(BM_brute_query)->Arg(1000)->Arg(100000);

void BM_kdtree_build(benchmark::State& state) {
  Rng rng(3);
  const Matrix donors = rng.normal_matrix(state.range(0), 2);
  for (auto _ : state) {
    KdTree tree(donors);
    benchmark::DoNotOptimize(tree.size());
  }
}
BENCHMARK(BM_kdtree_build)->Arg(100000);

}  // namespace
