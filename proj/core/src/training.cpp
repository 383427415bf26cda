#include "graphrep/training.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "graphrep/errors.hpp"
#include "graphrep/random.hpp"

namespace graphrep {

double loss_sq(const Matrix& F, const Matrix& Y_val, const std::vector<int>& val_indices) {
  if (val_indices.empty()) throw ValidationError("loss_sq: no validation rows");
  if (F.rows() != Y_val.rows() || F.cols() != Y_val.cols())
    throw ValidationError("loss_sq: score/target shape mismatch");
  double total = 0.0;
  for (int i : val_indices) {
    if (i < 0 || i >= F.rows())
      throw ValidationError("loss_sq: validation index " + std::to_string(i) + " out of range");
    total += (F.row(i) - Y_val.row(i)).squaredNorm();
  }
  return total / static_cast<double>(val_indices.size());
}

ForwardTrace forward_pipeline(const EmbeddingParams& params, const Matrix& X,
                              const GraphConfig& graph_cfg, const Matrix& Y0,
                              const PropagationConfig& prop_cfg) {
  ForwardTrace trace;
  EmbedTrace et = embed_with_trace(params, X);
  trace.Z = std::move(et.Z);
  trace.hidden = std::move(et.hidden);
  trace.graph = build_graph(trace.Z, graph_cfg);
  trace.op = sym_normalize(trace.graph);
  trace.prop = prop_cfg;
  trace.trajectory = std::move(propagate_iterative(trace.op.S, Y0, prop_cfg).trajectory);
  return trace;
}

FrozenStructure freeze_structure(const ForwardTrace& trace) {
  return FrozenStructure{trace.graph.edges, trace.graph.sigma_sq};
}

ForwardTrace frozen_forward(const EmbeddingParams& params, const Matrix& X,
                            const FrozenStructure& structure, const Matrix& Y0,
                            const PropagationConfig& prop_cfg) {
  ForwardTrace trace;
  EmbedTrace et = embed_with_trace(params, X);
  trace.Z = std::move(et.Z);
  trace.hidden = std::move(et.hidden);
  const Index n = trace.Z.rows();
  // distances only at the frozen edges, with the same expression as
  // pairwise_sq_dists so both pipelines agree bitwise on shared pairs
  Matrix D = Matrix::Zero(n, n);
  for (const Edge& e : structure.edges) {
    if (e.i < 0 || e.i >= e.j || e.j >= n)
      throw ValidationError("frozen_forward: edge (" + std::to_string(e.i) + "," +
                            std::to_string(e.j) + ") out of range");
    const double d = (trace.Z.row(e.i) - trace.Z.row(e.j)).squaredNorm();
    D(e.i, e.j) = d;
    D(e.j, e.i) = d;
  }
  trace.graph = gaussian_weights(D, structure.edges, structure.sigma_sq);
  trace.op = sym_normalize(trace.graph);
  trace.prop = prop_cfg;
  trace.trajectory = std::move(propagate_iterative(trace.op.S, Y0, prop_cfg).trajectory);
  return trace;
}

double frozen_loss(const EmbeddingParams& params, const Matrix& X,
                   const FrozenStructure& structure, const Matrix& Y0,
                   const PropagationConfig& prop_cfg, const std::vector<int>& val_indices,
                   const Matrix& Y_val) {
  const ForwardTrace trace = frozen_forward(params, X, structure, Y0, prop_cfg);
  return loss_sq(trace.scores(), Y_val, val_indices);
}

double ParamGradient::norm() const {
  double sq = w_out.size() > 0 ? w_out.squaredNorm() : 0.0;
  if (w_hidden.size() > 0) sq += w_hidden.squaredNorm();
  if (b_hidden.size() > 0) sq += b_hidden.squaredNorm();
  return std::sqrt(sq);
}

ParamGradient backward(const ForwardTrace& trace, const EmbeddingParams& params, const Matrix& X,
                       const std::vector<int>& val_indices, const Matrix& Y_val) {
  validate_params(params);
  const Index n = trace.Z.rows();
  const int T = trace.prop.iterations;
  if (static_cast<int>(trace.trajectory.size()) != T + 1)
    throw ValidationError("backward: trajectory length does not match iteration count");
  if (val_indices.empty()) throw ValidationError("backward: no validation rows");
  if (X.rows() != n) throw ValidationError("backward: feature/embedding row mismatch");
  const Index c = trace.trajectory.front().cols();
  if (Y_val.rows() != n || Y_val.cols() != c)
    throw ValidationError("backward: target shape mismatch");

  const double alpha = trace.prop.alpha;
  const Graph& g = trace.graph;
  const std::size_t m = g.edges.size();

  // adjoint of the scores, nonzero only on validation rows
  Matrix G = Matrix::Zero(n, c);
  const double scale = 2.0 / static_cast<double>(val_indices.size());
  for (int i : val_indices) G.row(i) = scale * (trace.trajectory.back().row(i) - Y_val.row(i));

  // A = sum_t alpha G^t (F^{t-1})^T via G^{t-1} = alpha S G^t, evaluated only
  // on the edge pattern; b_e = A_ij + A_ji is all the later math needs
  std::vector<double> B(m, 0.0);
  for (int t = T; t >= 1; --t) {
    const Matrix& F_prev = trace.trajectory[static_cast<std::size_t>(t) - 1];
    for (std::size_t e = 0; e < m; ++e) {
      const int i = g.edges[e].i;
      const int j = g.edges[e].j;
      B[e] += alpha * (G.row(i).dot(F_prev.row(j)) + G.row(j).dot(F_prev.row(i)));
    }
    if (t > 1) G = alpha * (trace.op.S * G).eval();
  }

  // degree channel: R_i = sum_q B_iq S_iq over the surviving entries of row i
  Vector R = Vector::Zero(n);
  for (std::size_t e = 0; e < m; ++e) {
    const int i = g.edges[e].i;
    const int j = g.edges[e].j;
    if (trace.op.isolated[i] || trace.op.isolated[j]) continue;
    const double s = g.weights[e] / std::sqrt(g.degrees[i] * g.degrees[j]);
    R[i] += B[e] * s;
    R[j] += B[e] * s;
  }

  // dL/dw_e = B_e / sqrt(g_i g_j) - R_i/(2 g_i) - R_j/(2 g_j); rows of S that
  // were hard-zeroed for isolation pass no gradient. Then through the kernel
  // (sigma^2 frozen) and the squared distances into Z.
  Matrix dZ = Matrix::Zero(n, trace.Z.cols());
  for (std::size_t e = 0; e < m; ++e) {
    const int i = g.edges[e].i;
    const int j = g.edges[e].j;
    double dw = 0.0;
    if (!trace.op.isolated[i] && !trace.op.isolated[j])
      dw += B[e] / std::sqrt(g.degrees[i] * g.degrees[j]);
    if (!trace.op.isolated[i]) dw -= R[i] / (2.0 * g.degrees[i]);
    if (!trace.op.isolated[j]) dw -= R[j] / (2.0 * g.degrees[j]);
    if (dw == 0.0) continue;
    const double dD = dw * (-g.weights[e] / g.sigma_sq);
    const Eigen::RowVectorXd diff = trace.Z.row(i) - trace.Z.row(j);
    dZ.row(i) += 2.0 * dD * diff;
    dZ.row(j) -= 2.0 * dD * diff;
  }

  ParamGradient grad;
  if (params.kind == ModelKind::Linear) {
    grad.w_out = dZ.transpose() * X;
  } else {
    grad.w_out = dZ.transpose() * trace.hidden;
    const Matrix delta =
        ((dZ * params.w_out).array() * (1.0 - trace.hidden.array().square())).matrix();
    grad.w_hidden = delta.transpose() * X;
    grad.b_hidden = delta.colwise().sum().transpose();
  }
  return grad;
}

std::pair<double, ParamGradient> frozen_loss_and_grad(const EmbeddingParams& params,
                                                      const Matrix& X,
                                                      const FrozenStructure& structure,
                                                      const Matrix& Y0,
                                                      const PropagationConfig& prop_cfg,
                                                      const std::vector<int>& val_indices,
                                                      const Matrix& Y_val) {
  const ForwardTrace trace = frozen_forward(params, X, structure, Y0, prop_cfg);
  const double loss = loss_sq(trace.scores(), Y_val, val_indices);
  ParamGradient grad = backward(trace, params, X, val_indices, Y_val);
  return {loss, std::move(grad)};
}

Vector finite_diff_grad(const EmbeddingParams& params,
                        const std::function<double(const EmbeddingParams&)>& f, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("finite_diff_grad: h must be positive");
  const Vector theta = flatten_params(params);
  Vector grad(theta.size());
  EmbeddingParams probe = params;
  Vector shifted = theta;
  for (Index k = 0; k < theta.size(); ++k) {
    shifted[k] = theta[k] + h;
    unflatten_params(shifted, probe);
    const double up = f(probe);
    shifted[k] = theta[k] - h;
    unflatten_params(shifted, probe);
    const double down = f(probe);
    grad[k] = (up - down) / (2.0 * h);
    shifted[k] = theta[k];
  }
  return grad;
}

EmbeddingParams sgd_step(const EmbeddingParams& params, const ParamGradient& grad, double lr) {
  if (!std::isfinite(lr)) throw ConfigError("sgd_step: lr must be finite");
  if (grad.w_out.rows() != params.w_out.rows() || grad.w_out.cols() != params.w_out.cols())
    throw ValidationError("sgd_step: w_out gradient shape mismatch");
  EmbeddingParams out = params;
  out.w_out -= lr * grad.w_out;
  if (params.kind == ModelKind::Mlp1) {
    if (grad.w_hidden.rows() != params.w_hidden.rows() ||
        grad.w_hidden.cols() != params.w_hidden.cols() ||
        grad.b_hidden.size() != params.b_hidden.size())
      throw ValidationError("sgd_step: hidden gradient shape mismatch");
    out.w_hidden -= lr * grad.w_hidden;
    out.b_hidden -= lr * grad.b_hidden;
  }
  return out;
}

namespace {

bool params_finite(const EmbeddingParams& p) {
  if (p.w_out.size() > 0 && !p.w_out.allFinite()) return false;
  if (p.w_hidden.size() > 0 && !p.w_hidden.allFinite()) return false;
  if (p.b_hidden.size() > 0 && !p.b_hidden.allFinite()) return false;
  return true;
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr))
    throw ConfigError("train: lr must be finite and >= 0");

  const Matrix Y0 = seed_label_matrix(ds);
  const ValidationTargets vt = validation_targets(ds);
  if (vt.indices.empty()) throw ValidationError("train: dataset has no Validation points");

  EmbeddingParams params =
      init_params(cfg.kind, static_cast<int>(ds.dim()), cfg.output_dim, cfg.hidden_dim, cfg.init,
                  cfg.init_scale, derive_seed(cfg.seed, Stream::Init));

  TrainResult result;
  result.history.best_epoch = 0;
  result.history.best_val_accuracy = -1.0;
  double last_grad_norm = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ForwardTrace trace;
    try {
      trace = forward_pipeline(params, ds.X, cfg.graph, Y0, cfg.propagation);
    } catch (const NumericError&) {
      throw;
    } catch (const Error& e) {
      // Only the parameters change between epochs, so a pipeline failure
      // after a clean first epoch is divergence, not a config fault.
      if (epoch == 1) throw;
      throw NumericError("train: diverged at epoch " + std::to_string(epoch) +
                         " (grad_norm=" + std::to_string(last_grad_norm) + "): " + e.what());
    }
    const double loss = loss_sq(trace.scores(), vt.Y, vt.indices);
    const Prediction pred = predict(trace.scores());
    const AccuracyStats acc = masked_accuracy(pred, ds, Role::Validation);
    const ParamGradient grad = backward(trace, params, ds.X, vt.indices, vt.Y);
    const double grad_norm = grad.norm();
    if (!std::isfinite(loss) || !std::isfinite(grad_norm))
      throw NumericError("train: diverged at epoch " + std::to_string(epoch) +
                         " (loss=" + std::to_string(loss) +
                         ", grad_norm=" + std::to_string(grad_norm) + ")");
    result.history.records.push_back({epoch, loss, acc.accuracy, grad_norm});
    last_grad_norm = grad_norm;
    if (acc.accuracy > result.history.best_val_accuracy) {
      result.history.best_val_accuracy = acc.accuracy;
      result.history.best_epoch = epoch;
      result.params = params;
    }
    params = sgd_step(params, grad, cfg.lr);
    if (!params_finite(params))
      throw NumericError("train: parameters diverged after epoch " + std::to_string(epoch) +
                         " (grad_norm=" + std::to_string(grad_norm) + ")");
  }
  return result;
}

AccuracyStats masked_accuracy(const Prediction& pred, const Dataset& ds, Role role) {
  if (static_cast<Index>(pred.labels.size()) != ds.n() ||
      static_cast<Index>(pred.abstain.size()) != ds.n())
    throw ValidationError("masked_accuracy: prediction/dataset size mismatch");
  AccuracyStats stats;
  int correct = 0;
  for (Index i = 0; i < ds.n(); ++i) {
    const auto at = static_cast<std::size_t>(i);
    if (ds.roles[at] != role || ds.y[at] == kUnknownLabel) continue;
    ++stats.scored;
    if (pred.abstain[at]) {
      ++stats.abstains;  // abstention scores as an error
      continue;
    }
    if (pred.labels[at] == ds.y[at]) ++correct;
  }
  stats.accuracy = stats.scored > 0 ? static_cast<double>(correct) / stats.scored : 0.0;
  return stats;
}

}  // namespace graphrep
