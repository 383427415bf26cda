#include <benchmark/benchmark.h>

#include <graphrep/dataset.hpp>
#include <graphrep/graph.hpp>
#include <graphrep/propagation.hpp>

#include "bench_common.hpp"

namespace {

using namespace graphrep;

void BM_PropagateIterative(benchmark::State& state) {
  Dataset ds = graphrep_bench::moons(400);
  ds = split_labels(ds, SplitConfig{}, 7);
  const Graph g = build_graph(ds.X, graphrep_bench::graph_cfg(10));
  const NormalizedOperator op = sym_normalize(g);
  const Matrix Y0 = seed_label_matrix(ds);
  PropagationConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    PropagationResult r = propagate_iterative(op.S, Y0, cfg);
    benchmark::DoNotOptimize(r.scores().data());
  }
}
BENCHMARK(BM_PropagateIterative)->Arg(30)->Arg(120);

}  // namespace
