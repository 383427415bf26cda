#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "graphrep/dataset.hpp"
#include "graphrep/embedding.hpp"
#include "graphrep/graph.hpp"
#include "graphrep/propagation.hpp"
#include "graphrep/types.hpp"

namespace graphrep {

struct TrainConfig {
  int epochs = 100;
  double lr = 0.1;
  PropagationConfig propagation;
  GraphConfig graph;
  ModelKind kind = ModelKind::Linear;
  int output_dim = 2;
  int hidden_dim = 0;  // Mlp1 only
  InitScheme init = InitScheme::Gaussian;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
  double grad_norm = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  int best_epoch = 0;            // earliest epoch attaining the best val accuracy
  double best_val_accuracy = 0.0;
};

/// Mean squared error over the validation rows: (1/|V|) sum_{i in V} ||F_i - Y_i||^2.
double loss_sq(const Matrix& F, const Matrix& Y_val, const std::vector<int>& val_indices);

/// Everything one pipeline evaluation produces, kept for the backward pass.
struct ForwardTrace {
  Matrix Z;       // n x d'
  Matrix hidden;  // n x h for Mlp1, empty for Linear
  Graph graph;
  NormalizedOperator op;
  PropagationConfig prop;
  std::vector<Matrix> trajectory;  // F^0..F^T

  const Matrix& scores() const { return trajectory.back(); }
};

/// embed -> pairwise distances -> kNN edges -> bandwidth -> weights ->
/// normalize -> propagate. The edge set and sigma^2 are re-selected from the
/// current embedding.
ForwardTrace forward_pipeline(const EmbeddingParams& params, const Matrix& X,
                              const GraphConfig& graph_cfg, const Matrix& Y0,
                              const PropagationConfig& prop_cfg);

/// Edge set and bandwidth snapshot. Within a gradient step both are treated
/// as constants: neighbor selection is not differentiable, so gradients flow
/// only through the weights of the retained edges, and the median bandwidth
/// is piecewise constant in the parameters.
struct FrozenStructure {
  std::vector<Edge> edges;
  double sigma_sq = 0.0;
};
FrozenStructure freeze_structure(const ForwardTrace& trace);

/// Same pipeline but on a fixed edge set and bandwidth. This is the exact
/// function the backward pass differentiates; the finite-difference oracle
/// must evaluate it, not the re-selecting pipeline.
ForwardTrace frozen_forward(const EmbeddingParams& params, const Matrix& X,
                            const FrozenStructure& structure, const Matrix& Y0,
                            const PropagationConfig& prop_cfg);
double frozen_loss(const EmbeddingParams& params, const Matrix& X,
                   const FrozenStructure& structure, const Matrix& Y0,
                   const PropagationConfig& prop_cfg, const std::vector<int>& val_indices,
                   const Matrix& Y_val);

/// Gradient of the loss with respect to every parameter block, same shapes
/// as EmbeddingParams.
struct ParamGradient {
  Matrix w_out;
  Matrix w_hidden;  // empty for Linear
  Vector b_hidden;  // empty for Linear
  double norm() const;
};

/// Reverse-mode gradient through propagation -> normalization -> kernel ->
/// distances -> embedding, for the trace's (fixed) edge set and bandwidth.
ParamGradient backward(const ForwardTrace& trace, const EmbeddingParams& params, const Matrix& X,
                       const std::vector<int>& val_indices, const Matrix& Y_val);

std::pair<double, ParamGradient> frozen_loss_and_grad(const EmbeddingParams& params,
                                                      const Matrix& X,
                                                      const FrozenStructure& structure,
                                                      const Matrix& Y0,
                                                      const PropagationConfig& prop_cfg,
                                                      const std::vector<int>& val_indices,
                                                      const Matrix& Y_val);

/// Central differences (f(theta + h e_k) - f(theta - h e_k)) / (2h) per
/// coordinate, in flatten_params order. The closure must be deterministic
/// with fixed structure (see FrozenStructure).
Vector finite_diff_grad(const EmbeddingParams& params,
                        const std::function<double(const EmbeddingParams&)>& f, double h = 1e-5);

/// theta' = theta - lr * grad, all blocks.
EmbeddingParams sgd_step(const EmbeddingParams& params, const ParamGradient& grad, double lr);

/// Full-batch gradient descent: per epoch the graph is rebuilt from the
/// current embedding, the loss and gradient are taken on the validation
/// rows, and one step is applied. Returns the parameters of the epoch with
/// the best validation accuracy (earliest on ties). Throws NumericError
/// with the epoch and gradient norm if the loss or gradient goes non-finite.
struct TrainResult {
  EmbeddingParams params;
  TrainHistory history;
};
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

/// Accuracy over points with the given role and a known label; abstentions
/// count as errors.
struct AccuracyStats {
  double accuracy = 0.0;
  int abstains = 0;
  int scored = 0;
};
AccuracyStats masked_accuracy(const Prediction& pred, const Dataset& ds, Role role);

}  // namespace graphrep
