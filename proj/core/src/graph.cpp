#include "graphrep/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

#include "graphrep/errors.hpp"
#include "detail/number_format.hpp"

namespace graphrep {

Matrix pairwise_sq_dists(const Matrix& Z) {
  const Index n = Z.rows();
  if (n < 2) throw ValidationError("pairwise_sq_dists: need at least 2 points");
  if (!Z.allFinite()) throw ValidationError("pairwise_sq_dists: non-finite input");

  Matrix D = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = (Z.row(i) - Z.row(j)).squaredNorm();
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

std::vector<Edge> knn_edges(const Matrix& D, int k) {
  const int n = static_cast<int>(D.rows());
  if (k < 1 || k > n - 1)
    throw ConfigError("knn_edges: k must be in [1, n-1], got k=" + std::to_string(k) +
                      " with n=" + std::to_string(n));

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(D(i, j), j);
    // pair ordering = (distance, index): ties admit the smaller index first
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) {
      const int j = cand[t].second;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) edges.push_back(Edge{i, j});
  return edges;
}

double resolve_sigma_sq(const Matrix& D, const std::vector<Edge>& edges, const GraphConfig& cfg) {
  if (edges.empty()) throw ConfigError("resolve_sigma_sq: empty edge set");
  if (cfg.sigma_mode == SigmaMode::Fixed) {
    if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma))
      throw ConfigError("resolve_sigma_sq: Fixed sigma must be finite and > 0");
    return cfg.sigma * cfg.sigma;
  }
  std::vector<double> dists;
  dists.reserve(edges.size());
  for (const Edge& e : edges) dists.push_back(D(e.i, e.j));
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double median = m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return median == 0.0 ? 1.0 : median;
}

Graph gaussian_weights(const Matrix& D, std::vector<Edge> edges, double sigma_sq) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq))
    throw ConfigError("gaussian_weights: sigma_sq must be finite and > 0");
  Graph g;
  g.n = static_cast<int>(D.rows());
  g.edges = std::move(edges);
  g.sigma_sq = sigma_sq;
  g.weights.resize(g.edges.size());
  g.degrees = Vector::Zero(g.n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& ed = g.edges[e];
    const double w = std::exp(-D(ed.i, ed.j) / sigma_sq);
    g.weights[e] = w;
    g.degrees[ed.i] += w;
    g.degrees[ed.j] += w;
  }
  return g;
}

NormalizedOperator sym_normalize(const Graph& g) {
  NormalizedOperator op;
  op.isolated.assign(g.n, 0);
  for (int i = 0; i < g.n; ++i)
    if (g.degrees[i] < kIsolationThreshold) op.isolated[i] = 1;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& ed = g.edges[e];
    if (op.isolated[ed.i] || op.isolated[ed.j]) continue;
    const double s = g.weights[e] / std::sqrt(g.degrees[ed.i] * g.degrees[ed.j]);
    triplets.emplace_back(ed.i, ed.j, s);
    triplets.emplace_back(ed.j, ed.i, s);
  }
  op.S.resize(g.n, g.n);
  op.S.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

Graph build_graph(const Matrix& Z, const GraphConfig& cfg) {
  const Matrix D = pairwise_sq_dists(Z);
  std::vector<Edge> edges = knn_edges(D, cfg.k);
  const double sigma_sq = resolve_sigma_sq(D, edges, cfg);
  return gaussian_weights(D, std::move(edges), sigma_sq);
}

void dump_edges(const Graph& g, std::ostream& os) {
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    os << g.edges[e].i << ' ' << g.edges[e].j << ' ' << detail::format_sci17(g.weights[e])
       << '\n';
}

}  // namespace graphrep
