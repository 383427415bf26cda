#pragma once

#include <Eigen/Dense>

namespace graphrep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Label value for points whose class is not known.
inline constexpr int kUnknownLabel = -1;

}  // namespace graphrep
