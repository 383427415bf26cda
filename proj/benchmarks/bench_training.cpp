#include <benchmark/benchmark.h>

#include <graphrep/dataset.hpp>
#include <graphrep/embedding.hpp>
#include <graphrep/training.hpp>

#include "bench_common.hpp"

namespace {

using namespace graphrep;

// one full training epoch: rebuild the graph, propagate, backpropagate
void BM_EpochForwardBackward(benchmark::State& state) {
  Dataset ds = graphrep_bench::moons(static_cast<int>(state.range(0)));
  ds = split_labels(ds, SplitConfig{}, 7);
  const Matrix Y0 = seed_label_matrix(ds);
  const ValidationTargets vt = validation_targets(ds);
  const EmbeddingParams params = init_params(ModelKind::Linear, static_cast<int>(ds.dim()), 2, 0,
                                             InitScheme::Gaussian, 0.1, 3);
  const GraphConfig gc = graphrep_bench::graph_cfg(10);
  const PropagationConfig pc;
  for (auto _ : state) {
    const ForwardTrace trace = forward_pipeline(params, ds.X, gc, Y0, pc);
    const ParamGradient grad = backward(trace, params, ds.X, vt.indices, vt.Y);
    benchmark::DoNotOptimize(grad.w_out.data());
  }
}
BENCHMARK(BM_EpochForwardBackward)->Arg(200)->Arg(400);

}  // namespace
