#include <benchmark/benchmark.h>

#include <graphrep/graph.hpp>

#include "bench_common.hpp"

namespace {

using namespace graphrep;

void BM_PairwiseSqDists(benchmark::State& state) {
  const Dataset ds = graphrep_bench::moons(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Matrix D = pairwise_sq_dists(ds.X);
    benchmark::DoNotOptimize(D.data());
  }
}
BENCHMARK(BM_PairwiseSqDists)->Arg(200)->Arg(400)->Arg(800);

void BM_KnnEdges(benchmark::State& state) {
  const Dataset ds = graphrep_bench::moons(static_cast<int>(state.range(0)));
  const Matrix D = pairwise_sq_dists(ds.X);
  for (auto _ : state) {
    auto edges = knn_edges(D, 10);
    benchmark::DoNotOptimize(edges.data());
  }
}
BENCHMARK(BM_KnnEdges)->Arg(200)->Arg(400)->Arg(800);

void BM_BuildGraph(benchmark::State& state) {
  const Dataset ds = graphrep_bench::moons(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Graph g = build_graph(ds.X, graphrep_bench::graph_cfg(10));
    benchmark::DoNotOptimize(g.weights.data());
  }
}
BENCHMARK(BM_BuildGraph)->Arg(200)->Arg(400)->Arg(800);

}  // namespace

BENCHMARK_MAIN();
