#include <vector>

#include "doctest.h"
#include "graphrep/errors.hpp"
#include "graphrep/graph.hpp"
#include "graphrep/propagation.hpp"
#include "test_helpers.hpp"

using namespace graphrep;
using test::randn;

namespace {

Eigen::SparseMatrix<double> swap_operator() {
  // S = [[0,1],[1,0]]: one unit edge between two nodes.
  Eigen::SparseMatrix<double> S(2, 2);
  S.insert(0, 1) = 1.0;
  S.insert(1, 0) = 1.0;
  S.makeCompressed();
  return S;
}

/// Random normalized operator obtained through the real graph pipeline.
NormalizedOperator random_operator(int n, int k, std::uint64_t seed) {
  GraphConfig cfg;
  cfg.k = k;
  return sym_normalize(build_graph(randn(n, 3, seed), cfg));
}

/// Dense Erdos-Renyi graph with uniform weights. Unlike kNN graphs on
/// clustered points these mix fast (second eigenvalue well below 1), so the
/// iterates reach the fixed point quickly even at alpha = 0.9.
NormalizedOperator random_dense_operator(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.2, 1.0);
  Graph g;
  g.n = n;
  g.sigma_sq = 1.0;
  g.degrees = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng) >= p) continue;
      const double w = weight(rng);
      g.edges.push_back(Edge{i, j});
      g.weights.push_back(w);
      g.degrees[i] += w;
      g.degrees[j] += w;
    }
  return sym_normalize(g);
}

Matrix one_hot_rows(int n, int c, const std::vector<std::pair<int, int>>& seeds) {
  Matrix Y = Matrix::Zero(n, c);
  for (auto [row, cls] : seeds) Y(row, cls) = 1.0;
  return Y;
}

}  // namespace

TEST_CASE("alpha zero leaves the labels untouched") {
  const auto op = random_operator(8, 3, 501);
  const Matrix Y0 = one_hot_rows(8, 2, {{0, 0}, {5, 1}});
  PropagationConfig cfg;
  cfg.alpha = 0.0;
  cfg.iterations = 7;
  const auto res = propagate_iterative(op.S, Y0, cfg);
  for (const Matrix& F : res.trajectory) CHECK(F == Y0);
  CHECK(propagate_closed_form(op.S, Y0, 0.0) == Y0);
}

TEST_CASE("one hand iteration on the two-node swap") {
  const Matrix Y0 = one_hot_rows(2, 1, {{0, 0}});
  PropagationConfig cfg;
  cfg.alpha = 0.5;
  cfg.iterations = 1;
  const auto res = propagate_iterative(swap_operator(), Y0, cfg);
  CHECK(res.scores()(0, 0) == 0.5);
  CHECK(res.scores()(1, 0) == 0.5);
}

TEST_CASE("two-node fixed point matches the hand solve") {
  const Matrix Y0 = one_hot_rows(2, 1, {{0, 0}});

  // (I - 0.5 S) F = 0.5 Y0 has the solution (2/3, 1/3).
  const Matrix Fstar = propagate_closed_form(swap_operator(), Y0, 0.5);
  CHECK(Fstar(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(Fstar(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  PropagationConfig cfg;
  cfg.alpha = 0.5;
  cfg.iterations = 60;
  const auto res = propagate_iterative(swap_operator(), Y0, cfg);
  CHECK((res.scores() - Fstar).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("iterative propagation converges to the closed form") {
  // alpha^120 <= 2.3e-12 at alpha = 0.8, so the bound holds on any graph.
  for (std::uint64_t seed : {502, 503, 504}) {
    const int n = 10 + static_cast<int>(seed % 41);  // up to 50
    const auto op = random_operator(n, 4, seed);
    const Matrix Y0 = one_hot_rows(n, 3, {{0, 0}, {1, 1}, {2, 2}, {n - 1, 0}});

    for (double alpha : {0.5, 0.8}) {
      PropagationConfig cfg;
      cfg.alpha = alpha;
      cfg.iterations = 120;
      const auto res = propagate_iterative(op.S, Y0, cfg);
      const Matrix Fstar = propagate_closed_form(op.S, Y0, alpha);
      CHECK((res.scores() - Fstar).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  // alpha = 0.9 needs the fast-mixing dense family for the same tolerance.
  for (std::uint64_t seed : {512, 513, 514}) {
    const int n = 20 + static_cast<int>(seed % 31);
    const auto op = random_dense_operator(n, 0.5, seed);
    const Matrix Y0 = one_hot_rows(n, 2, {{0, 0}, {1, 1}, {5, 0}});

    for (double alpha : {0.5, 0.9}) {
      PropagationConfig cfg;
      cfg.alpha = alpha;
      cfg.iterations = 120;
      const auto res = propagate_iterative(op.S, Y0, cfg);
      const Matrix Fstar = propagate_closed_form(op.S, Y0, alpha);
      CHECK((res.scores() - Fstar).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("trajectory bookkeeping") {
  const auto op = random_operator(12, 3, 505);
  const Matrix Y0 = one_hot_rows(12, 2, {{0, 0}, {1, 1}});
  PropagationConfig cfg;
  cfg.alpha = 0.9;
  cfg.iterations = 17;
  const auto res = propagate_iterative(op.S, Y0, cfg);

  REQUIRE(res.trajectory.size() == 18);
  CHECK(res.trajectory.front() == Y0);
  CHECK(&res.scores() == &res.trajectory.back());
  for (const Matrix& F : res.trajectory) CHECK(F.allFinite());
}

TEST_CASE("iterates stay nonnegative with bounded total mass") {
  const auto op = random_operator(20, 4, 506);
  const Matrix Y0 = one_hot_rows(20, 2, {{0, 0}, {3, 0}, {8, 1}, {11, 1}});
  PropagationConfig cfg;
  cfg.alpha = 0.9;
  cfg.iterations = 80;
  const auto res = propagate_iterative(op.S, Y0, cfg);

  // S is entrywise nonnegative with operator 2-norm <= 1, so every iterate is
  // nonnegative and its Frobenius norm never exceeds that of Y0.
  const double y_norm = Y0.norm();
  for (const Matrix& F : res.trajectory) {
    CHECK(F.minCoeff() >= 0.0);
    CHECK(F.norm() <= y_norm * (1.0 + 1e-12));
  }
}

TEST_CASE("per-step Frobenius contraction toward the fixed point") {
  for (std::uint64_t seed : {507, 508}) {
    const auto op = random_operator(15, 3, seed);
    const Matrix Y0 = one_hot_rows(15, 2, {{0, 0}, {7, 1}});
    const double alpha = 0.9;
    const Matrix Fstar = propagate_closed_form(op.S, Y0, alpha);

    PropagationConfig cfg;
    cfg.alpha = alpha;
    cfg.iterations = 40;
    const auto res = propagate_iterative(op.S, Y0, cfg);
    for (std::size_t t = 1; t < res.trajectory.size(); ++t) {
      const double before = (res.trajectory[t - 1] - Fstar).norm();
      const double after = (res.trajectory[t] - Fstar).norm();
      CHECK(after <= alpha * before + 1e-12);
    }
  }
}

TEST_CASE("closed form enforces the dense-solve cap") {
  const auto op = random_operator(10, 3, 509);
  const Matrix Y0 = one_hot_rows(10, 2, {{0, 0}});
  CHECK_THROWS_AS(propagate_closed_form(op.S, Y0, 0.5, 5), ConfigError);
}

TEST_CASE("propagation validates its inputs") {
  const auto op = random_operator(6, 2, 510);
  const Matrix Y0 = one_hot_rows(6, 2, {{0, 0}});
  PropagationConfig cfg;

  cfg.alpha = 1.0;
  CHECK_THROWS_AS(propagate_iterative(op.S, Y0, cfg), ConfigError);
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(propagate_iterative(op.S, Y0, cfg), ConfigError);
  cfg.alpha = 0.5;
  cfg.iterations = 0;
  CHECK_THROWS_AS(propagate_iterative(op.S, Y0, cfg), ConfigError);
  cfg.iterations = 5;
  CHECK_THROWS_AS(propagate_iterative(op.S, one_hot_rows(5, 2, {}), cfg), ValidationError);
}

TEST_CASE("predict reads out argmax with tie and abstain rules") {
  Matrix F(4, 2);
  F << 0.2, 0.7,   // clear class 1
      0.5, 0.5,    // tie -> class 0
      0.0, 0.0,    // all-zero -> class 0 + abstain
      1e-300, 0.0; // tiny but nonzero -> class 0, no abstain
  const Prediction pred = predict(F);
  CHECK(pred.labels == std::vector<int>{1, 0, 0, 0});
  CHECK(pred.abstain == std::vector<char>{0, 0, 1, 0});

  Matrix bad = F;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict(bad), ValidationError);
}

TEST_CASE("label permutation equivariance") {
  const auto op = random_operator(14, 3, 511);
  const Matrix Y0 = one_hot_rows(14, 3, {{0, 0}, {4, 1}, {9, 2}});
  PropagationConfig cfg;
  cfg.alpha = 0.8;
  cfg.iterations = 50;

  const auto base = propagate_iterative(op.S, Y0, cfg);
  const auto base_pred = predict(base.scores());

  // Columns permuted by p: class c moves to column p[c].
  const std::vector<int> p = {2, 0, 1};
  Matrix Yp(14, 3);
  for (int c = 0; c < 3; ++c) Yp.col(p[c]) = Y0.col(c);
  const auto permuted = propagate_iterative(op.S, Yp, cfg);
  const auto perm_pred = predict(permuted.scores());

  for (int c = 0; c < 3; ++c) CHECK(permuted.scores().col(p[c]) == base.scores().col(c));
  for (std::size_t i = 0; i < base_pred.labels.size(); ++i) {
    CHECK(perm_pred.abstain[i] == base_pred.abstain[i]);
    // Abstained rows are all-zero ties; the readout pins those to class 0.
    if (!base_pred.abstain[i]) CHECK(perm_pred.labels[i] == p[base_pred.labels[i]]);
  }
}
