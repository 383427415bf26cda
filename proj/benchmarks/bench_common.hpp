#pragma once

#include <benchmark/benchmark.h>

#include <graphrep/dataset.hpp>
#include <graphrep/graph.hpp>

namespace graphrep_bench {

inline graphrep::Dataset moons(int n) {
  return graphrep::gen_two_moons(n, 0.1, 8, 3.0, 42);
}

inline graphrep::GraphConfig graph_cfg(int k) {
  graphrep::GraphConfig cfg;
  cfg.k = k;
  return cfg;
}

}  // namespace graphrep_bench
