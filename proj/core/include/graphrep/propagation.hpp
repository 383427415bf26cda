#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "graphrep/types.hpp"

namespace graphrep {

struct PropagationConfig {
  double alpha = 0.9;  // in [0,1); strict so the closed form exists
  int iterations = 30; // fixed count T, keeps the backward pass a fixed graph
};

/// Damped propagation F^t = alpha * S * F^{t-1} + (1-alpha) * Y0, t = 1..T.
/// The full trajectory F^0..F^T is retained for the training backward pass.
struct PropagationResult {
  std::vector<Matrix> trajectory;
  const Matrix& scores() const { return trajectory.back(); }
};
PropagationResult propagate_iterative(const Eigen::SparseMatrix<double>& S, const Matrix& Y0,
                                      const PropagationConfig& cfg);

/// Dense solve of (I - alpha*S) F = (1-alpha) Y0; the fixed point of the
/// iteration above. Used as the test oracle. Throws ConfigError when n
/// exceeds dense_cap.
Matrix propagate_closed_form(const Eigen::SparseMatrix<double>& S, const Matrix& Y0, double alpha,
                             Index dense_cap = 2000);

/// Argmax readout. Ties break toward the smaller class index; rows that are
/// exactly zero (isolated, unreached nodes) get class 0 and an abstain flag.
struct Prediction {
  std::vector<int> labels;
  std::vector<char> abstain;
};
Prediction predict(const Matrix& F);

}  // namespace graphrep
