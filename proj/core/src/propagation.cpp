#include "graphrep/propagation.hpp"

#include <cmath>

#include "graphrep/errors.hpp"

namespace graphrep {

namespace {

void check_propagation_inputs(const Eigen::SparseMatrix<double>& S, const Matrix& Y0,
                              double alpha) {
  if (S.rows() != S.cols()) throw ValidationError("propagate: S must be square");
  if (Y0.rows() != S.rows()) throw ValidationError("propagate: Y0 row count must match S");
  if (Y0.cols() < 1) throw ValidationError("propagate: Y0 needs at least one class column");
  if (!(alpha >= 0.0) || !(alpha < 1.0))
    throw ConfigError("propagate: alpha must lie in [0, 1)");
  if (!Y0.allFinite()) throw ValidationError("propagate: Y0 has non-finite entries");
}

}  // namespace

PropagationResult propagate_iterative(const Eigen::SparseMatrix<double>& S, const Matrix& Y0,
                                      const PropagationConfig& cfg) {
  check_propagation_inputs(S, Y0, cfg.alpha);
  if (cfg.iterations < 1) throw ConfigError("propagate: iteration count must be >= 1");

  PropagationResult res;
  res.trajectory.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  res.trajectory.push_back(Y0);
  Matrix F = Y0;
  const double keep = 1.0 - cfg.alpha;
  for (int t = 1; t <= cfg.iterations; ++t) {
    F = cfg.alpha * (S * F) + keep * Y0;
    res.trajectory.push_back(F);
  }
  return res;
}

Matrix propagate_closed_form(const Eigen::SparseMatrix<double>& S, const Matrix& Y0, double alpha,
                             Index dense_cap) {
  check_propagation_inputs(S, Y0, alpha);
  const Index n = S.rows();
  if (n > dense_cap)
    throw ConfigError("propagate_closed_form: n=" + std::to_string(n) +
                      " exceeds the dense-solve cap of " + std::to_string(dense_cap));
  // alpha < 1 and spectral radius of S <= 1 make I - alpha*S nonsingular.
  Matrix A = Matrix::Identity(n, n) - alpha * Matrix(S);
  return A.partialPivLu().solve((1.0 - alpha) * Y0);
}

Prediction predict(const Matrix& F) {
  if (!F.allFinite()) throw ValidationError("predict: non-finite scores");
  const Index n = F.rows();
  const Index c = F.cols();
  Prediction pred;
  pred.labels.resize(n);
  pred.abstain.assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    if ((F.row(i).array() == 0.0).all()) {
      pred.labels[i] = 0;
      pred.abstain[i] = 1;
      continue;
    }
    int best = 0;
    for (Index k = 1; k < c; ++k)
      if (F(i, k) > F(i, best)) best = static_cast<int>(k);
    pred.labels[i] = best;
  }
  return pred;
}

}  // namespace graphrep
