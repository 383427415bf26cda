#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/SparseCore>

#include "graphrep/types.hpp"

namespace graphrep {

enum class SigmaMode { MedianHeuristic, Fixed };

struct GraphConfig {
  int k = 10;
  SigmaMode sigma_mode = SigmaMode::MedianHeuristic;
  double sigma = 0.0;  // bandwidth sigma when Fixed; the kernel uses sigma^2
};

/// Unordered node pair, stored with i < j.
struct Edge {
  int i = 0;
  int j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Symmetrized kNN graph with Gaussian weights. Each unordered pair is stored
/// once, lexicographically sorted; weights lie in (0,1] with w = 1 iff the
/// embedded endpoints coincide.
struct Graph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<double> weights;  // parallel to edges
  double sigma_sq = 0.0;        // the sigma^2 actually used
  Vector degrees;               // g_i = sum of incident edge weights
};

/// D_ij = ||z_i - z_j||^2, computed once per pair so D is exactly symmetric.
Matrix pairwise_sq_dists(const Matrix& Z);

/// Union-symmetrized kNN edge set: {i,j} is kept iff j is among the k nearest
/// of i or vice versa. Distance ties admit the smaller node index first.
std::vector<Edge> knn_edges(const Matrix& D, int k);

/// Fixed mode returns sigma^2. MedianHeuristic returns the median of the
/// retained edge distances (mean of the two middle values for even counts),
/// falling back to 1.0 if that median is zero.
double resolve_sigma_sq(const Matrix& D, const std::vector<Edge>& edges, const GraphConfig& cfg);

/// w_ij = exp(-D_ij / sigma_sq) on the given edges; also fills degrees.
Graph gaussian_weights(const Matrix& D, std::vector<Edge> edges, double sigma_sq);

/// S = D^{-1/2} W D^{-1/2} with zero diagonal. Nodes whose degree falls below
/// the isolation threshold get an all-zero row/column and are flagged.
struct NormalizedOperator {
  Eigen::SparseMatrix<double> S;
  std::vector<char> isolated;
};
NormalizedOperator sym_normalize(const Graph& graph);

inline constexpr double kIsolationThreshold = 1e-12;

/// Distances -> kNN edges -> bandwidth -> weights, in one call.
Graph build_graph(const Matrix& Z, const GraphConfig& cfg);

/// Edge-list dump: one `i j w` line per edge, i < j, lexicographic order,
/// weights with 17 significant digits.
void dump_edges(const Graph& graph, std::ostream& os);

}  // namespace graphrep
