#include "graphrep/embedding.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphrep/errors.hpp"
#include "graphrep/random.hpp"
#include "detail/number_format.hpp"

namespace graphrep {

namespace {

using nlohmann::json;

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
}

}  // namespace

const char* to_string(ModelKind kind) {
  return kind == ModelKind::Linear ? "linear" : "mlp1";
}

const char* to_string(InitScheme scheme) {
  return scheme == InitScheme::IdentityPad ? "identity_pad" : "gaussian";
}

void validate_params(const EmbeddingParams& p) {
  if (p.input_dim < 1 || p.output_dim < 1)
    throw ValidationError("params: input_dim and output_dim must be >= 1");
  if (p.kind == ModelKind::Linear) {
    if (p.hidden_dim != 0)
      throw ValidationError("params: Linear model must have hidden_dim = 0");
    if (p.w_out.rows() != p.output_dim || p.w_out.cols() != p.input_dim)
      throw ValidationError("params: w_out must be output_dim x input_dim for Linear");
    if (p.w_hidden.size() != 0 || p.b_hidden.size() != 0)
      throw ValidationError("params: Linear model must not carry hidden-layer blocks");
  } else {
    if (p.hidden_dim < 1) throw ValidationError("params: Mlp1 needs hidden_dim >= 1");
    if (p.w_out.rows() != p.output_dim || p.w_out.cols() != p.hidden_dim)
      throw ValidationError("params: w_out must be output_dim x hidden_dim for Mlp1");
    if (p.w_hidden.rows() != p.hidden_dim || p.w_hidden.cols() != p.input_dim)
      throw ValidationError("params: w_hidden must be hidden_dim x input_dim");
    if (p.b_hidden.size() != p.hidden_dim)
      throw ValidationError("params: b_hidden must have hidden_dim entries");
    check_finite(p.w_hidden, "params.w_hidden");
    if (!p.b_hidden.allFinite()) throw ValidationError("params.b_hidden: non-finite entries");
  }
  check_finite(p.w_out, "params.w_out");
}

EmbedTrace embed_with_trace(const EmbeddingParams& p, const Matrix& X) {
  validate_params(p);
  if (X.cols() != p.input_dim)
    throw ValidationError("embed: X has " + std::to_string(X.cols()) +
                          " columns, params expect " + std::to_string(p.input_dim));
  check_finite(X, "embed: X");

  EmbedTrace out;
  if (p.kind == ModelKind::Linear) {
    out.Z = X * p.w_out.transpose();
  } else {
    out.hidden = ((X * p.w_hidden.transpose()).rowwise() + p.b_hidden.transpose())
                     .array()
                     .tanh()
                     .matrix();
    out.Z = out.hidden * p.w_out.transpose();
  }
  return out;
}

Matrix embed(const EmbeddingParams& p, const Matrix& X) {
  return embed_with_trace(p, X).Z;
}

EmbeddingParams init_params(ModelKind kind, int input_dim, int output_dim, int hidden_dim,
                            InitScheme scheme, double scale, std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1)
    throw ConfigError("init_params: input_dim and output_dim must be >= 1");

  EmbeddingParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  p.output_dim = output_dim;
  p.hidden_dim = kind == ModelKind::Mlp1 ? hidden_dim : 0;

  if (kind == ModelKind::Mlp1 && hidden_dim < 1)
    throw ConfigError("init_params: Mlp1 needs hidden_dim >= 1");

  if (scheme == InitScheme::IdentityPad) {
    if (kind != ModelKind::Linear)
      throw ConfigError("init_params: IdentityPad is only valid for the Linear model");
    if (output_dim > input_dim)
      throw ConfigError("init_params: IdentityPad needs output_dim <= input_dim, got " +
                        std::to_string(output_dim) + " > " + std::to_string(input_dim));
    p.w_out = Matrix::Identity(output_dim, input_dim);
    return p;
  }

  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("init_params: Gaussian scale must be finite and > 0");

  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  const auto fill = [&](Matrix& m, Index rows, Index cols) {
    m.resize(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = gauss(rng);
  };
  if (kind == ModelKind::Mlp1) {
    fill(p.w_hidden, hidden_dim, input_dim);
    fill(p.w_out, output_dim, hidden_dim);
    p.b_hidden = Vector::Zero(hidden_dim);
  } else {
    fill(p.w_out, output_dim, input_dim);
  }
  return p;
}

Index param_count(const EmbeddingParams& p) {
  return p.w_out.size() + p.w_hidden.size() + p.b_hidden.size();
}

Vector flatten_params(const EmbeddingParams& p) {
  Vector theta(param_count(p));
  Index at = 0;
  for (Index r = 0; r < p.w_out.rows(); ++r)
    for (Index c = 0; c < p.w_out.cols(); ++c) theta[at++] = p.w_out(r, c);
  for (Index r = 0; r < p.w_hidden.rows(); ++r)
    for (Index c = 0; c < p.w_hidden.cols(); ++c) theta[at++] = p.w_hidden(r, c);
  for (Index i = 0; i < p.b_hidden.size(); ++i) theta[at++] = p.b_hidden[i];
  return theta;
}

void unflatten_params(const Vector& theta, EmbeddingParams& p) {
  if (theta.size() != param_count(p))
    throw ValidationError("unflatten_params: coordinate count mismatch");
  Index at = 0;
  for (Index r = 0; r < p.w_out.rows(); ++r)
    for (Index c = 0; c < p.w_out.cols(); ++c) p.w_out(r, c) = theta[at++];
  for (Index r = 0; r < p.w_hidden.rows(); ++r)
    for (Index c = 0; c < p.w_hidden.cols(); ++c) p.w_hidden(r, c) = theta[at++];
  for (Index i = 0; i < p.b_hidden.size(); ++i) p.b_hidden[i] = theta[at++];
}

namespace {

// Hand-rolled emitter: fixed field order and 17-significant-digit numbers,
// so identical parameters always produce identical bytes.
void emit_matrix(std::ostream& os, const Matrix& m) {
  os << "[";
  for (Index r = 0; r < m.rows(); ++r) {
    if (r) os << ", ";
    os << "[";
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) os << ", ";
      os << detail::format_sci17(m(r, c));
    }
    os << "]";
  }
  os << "]";
}

void emit_vector(std::ostream& os, const Vector& v) {
  os << "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << detail::format_sci17(v[i]);
  }
  os << "]";
}

Matrix parse_matrix(const json& j, const std::string& field, Index rows, Index cols) {
  if (!j.is_array()) throw ValidationError("model file: \"" + field + "\" must be an array");
  if (static_cast<Index>(j.size()) != rows)
    throw ValidationError("model file: \"" + field + "\" has " + std::to_string(j.size()) +
                          " rows, expected " + std::to_string(rows));
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ValidationError("model file: \"" + field + "\" row " + std::to_string(r) +
                            " must have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number())
        throw ValidationError("model file: \"" + field + "\" holds a non-numeric entry");
      m(r, c) = cell.get<double>();
    }
  }
  return m;
}

}  // namespace

void save_params(const EmbeddingParams& p, const std::string& path) {
  validate_params(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("save_params: cannot open " + path + " for writing");
  out << "{\n";
  out << "  \"kind\": \"" << to_string(p.kind) << "\",\n";
  out << "  \"d\": " << p.input_dim << ",\n";
  out << "  \"d_prime\": " << p.output_dim << ",\n";
  out << "  \"h\": " << p.hidden_dim << ",\n";
  out << "  \"w_out\": ";
  emit_matrix(out, p.w_out);
  out << ",\n  \"w_hidden\": ";
  emit_matrix(out, p.w_hidden);
  out << ",\n  \"b_hidden\": ";
  emit_vector(out, p.b_hidden);
  out << "\n}\n";
  if (!out) throw ValidationError("save_params: write to " + path + " failed");
}

EmbeddingParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_params: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("load_params: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("model file: top level must be an object");

  static const char* kFields[] = {"kind", "d", "d_prime", "h", "w_out", "w_hidden", "b_hidden"};
  for (const char* f : kFields)
    if (!j.contains(f)) throw ValidationError("model file: missing field \"" + std::string(f) + "\"");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* f : kFields) known = known || key == f;
    if (!known) throw ValidationError("model file: unknown field \"" + key + "\"");
  }

  EmbeddingParams p;
  try {
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "linear")
      p.kind = ModelKind::Linear;
    else if (kind == "mlp1")
      p.kind = ModelKind::Mlp1;
    else
      throw ValidationError("model file: unknown kind \"" + kind + "\"");

    p.input_dim = j["d"].get<int>();
    p.output_dim = j["d_prime"].get<int>();
    p.hidden_dim = j["h"].get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  if (p.input_dim < 1 || p.output_dim < 1)
    throw ValidationError("model file: dimensions must be >= 1");

  const Index out_cols = p.kind == ModelKind::Linear ? p.input_dim : p.hidden_dim;
  p.w_out = parse_matrix(j["w_out"], "w_out", p.output_dim, out_cols);
  if (p.kind == ModelKind::Mlp1) {
    p.w_hidden = parse_matrix(j["w_hidden"], "w_hidden", p.hidden_dim, p.input_dim);
    const auto& jb = j["b_hidden"];
    if (!jb.is_array() || static_cast<Index>(jb.size()) != p.hidden_dim)
      throw ValidationError("model file: \"b_hidden\" must have h entries");
    p.b_hidden.resize(p.hidden_dim);
    for (Index i = 0; i < p.hidden_dim; ++i) {
      const auto& cell = jb[static_cast<std::size_t>(i)];
      if (!cell.is_number())
        throw ValidationError("model file: \"b_hidden\" holds a non-numeric entry");
      p.b_hidden[i] = cell.get<double>();
    }
  } else {
    if (!j["w_hidden"].is_array() || !j["w_hidden"].empty())
      throw ValidationError("model file: \"w_hidden\" must be empty for a linear model");
    if (!j["b_hidden"].is_array() || !j["b_hidden"].empty())
      throw ValidationError("model file: \"b_hidden\" must be empty for a linear model");
  }

  validate_params(p);
  return p;
}

}  // namespace graphrep
