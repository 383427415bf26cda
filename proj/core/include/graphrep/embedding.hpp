#pragma once

#include <cstdint>
#include <string>

#include "graphrep/types.hpp"

namespace graphrep {

enum class ModelKind { Linear, Mlp1 };

enum class InitScheme { IdentityPad, Gaussian };

/// Parameters of the map from input space to representation space.
///
/// Linear:  z = w_out * x                                (w_out is d' x d)
/// Mlp1:    z = w_out * tanh(w_hidden * x + b_hidden)    (w_out is d' x h)
///
/// There is no output bias anywhere: pairwise distances are translation
/// invariant, so an output bias would be a non-identifiable parameter.
struct EmbeddingParams {
  ModelKind kind = ModelKind::Linear;
  int input_dim = 0;   // d
  int output_dim = 0;  // d'
  int hidden_dim = 0;  // h; 0 for Linear
  Matrix w_out;
  Matrix w_hidden;  // empty for Linear
  Vector b_hidden;  // empty for Linear
};

/// Throws ValidationError if any shape is inconsistent with (kind, dims)
/// or any entry is non-finite.
void validate_params(const EmbeddingParams& params);

/// Maps every row of X (n x d) into the representation space. Returns Z (n x d').
Matrix embed(const EmbeddingParams& params, const Matrix& X);

/// Embedding output together with the hidden activations the backward pass
/// needs. `hidden` is n x h for Mlp1 and empty for Linear.
struct EmbedTrace {
  Matrix Z;
  Matrix hidden;
};
EmbedTrace embed_with_trace(const EmbeddingParams& params, const Matrix& X);

/// IdentityPad: w_out = first d' rows of the d x d identity (Linear only,
/// requires d' <= d); training then starts at the euclidean baseline.
/// Gaussian: every weight i.i.d. normal(0, scale^2) from a seeded generator,
/// b_hidden = 0. Same seed gives bit-identical parameters.
EmbeddingParams init_params(ModelKind kind, int input_dim, int output_dim, int hidden_dim,
                            InitScheme scheme, double scale, std::uint64_t seed);

/// JSON model file with fields {kind, d, d_prime, h, w_out, w_hidden, b_hidden};
/// numbers are written with 17 significant digits so values round-trip exactly.
void save_params(const EmbeddingParams& params, const std::string& path);
EmbeddingParams load_params(const std::string& path);

/// Number of free coordinates across all parameter blocks.
Index param_count(const EmbeddingParams& params);

/// Stacks w_out, then w_hidden, then b_hidden (row-major) into one vector.
Vector flatten_params(const EmbeddingParams& params);

/// Inverse of flatten_params; block shapes come from the existing fields.
void unflatten_params(const Vector& theta, EmbeddingParams& params);

const char* to_string(ModelKind kind);
const char* to_string(InitScheme scheme);

}  // namespace graphrep
