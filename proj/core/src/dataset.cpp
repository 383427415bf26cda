#include "graphrep/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "graphrep/errors.hpp"
#include "graphrep/random.hpp"
#include "detail/number_format.hpp"

namespace graphrep {

namespace {

/// Class tokens for generated datasets: plain decimal, zero-padded to a
/// common width so the lexicographic order on load matches the class order.
std::vector<std::string> default_class_names(int classes) {
  std::size_t width = std::to_string(classes - 1).size();
  std::vector<std::string> names;
  names.reserve(classes);
  for (int c = 0; c < classes; ++c) {
    std::string s = std::to_string(c);
    names.push_back(std::string(width - s.size(), '0') + s);
  }
  return names;
}

}  // namespace

Dataset gen_two_moons(int n, double noise_sd, int nuisance_dims, double nuisance_sd,
                      std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw ConfigError("gen_two_moons: n must be even and >= 2");
  if (noise_sd < 0.0 || nuisance_sd < 0.0)
    throw ConfigError("gen_two_moons: noise levels must be >= 0");
  if (nuisance_dims < 0) throw ConfigError("gen_two_moons: nuisance_dims must be >= 0");

  const int d = 2 + nuisance_dims;
  const int half = n / 2;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  ds.roles.assign(n, Role::Seed);
  ds.num_classes = 2;
  ds.class_names = default_class_names(2);

  for (int i = 0; i < n; ++i) {
    const double t = angle(rng);
    const double nx = gauss(rng);
    const double ny = gauss(rng);
    double cx, cy;
    if (i < half) {
      cx = std::cos(t);
      cy = std::sin(t);
      ds.y[i] = 0;
    } else {
      cx = 1.0 - std::cos(t);
      cy = 0.5 - std::sin(t);
      ds.y[i] = 1;
    }
    ds.X(i, 0) = cx + noise_sd * nx;
    ds.X(i, 1) = cy + noise_sd * ny;
    for (int q = 0; q < nuisance_dims; ++q) ds.X(i, 2 + q) = nuisance_sd * gauss(rng);
  }
  return ds;
}

Dataset gen_blobs(int n_per_class, int classes, int dim, int informative_dims, double separation,
                  double noise_sd, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("gen_blobs: n_per_class must be >= 1");
  if (classes < 2) throw ConfigError("gen_blobs: need at least 2 classes");
  if (dim < 1) throw ConfigError("gen_blobs: dim must be >= 1");
  if (informative_dims < 0 || informative_dims > dim)
    throw ConfigError("gen_blobs: informative_dims must lie in [0, dim]");
  if (separation < 0.0 || noise_sd < 0.0)
    throw ConfigError("gen_blobs: separation and noise_sd must be >= 0");

  const int n = n_per_class * classes;
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.X.resize(n, dim);
  ds.y.resize(n);
  ds.roles.assign(n, Role::Seed);
  ds.num_classes = classes;
  ds.class_names = default_class_names(classes);

  int at = 0;
  for (int c = 0; c < classes; ++c) {
    for (int p = 0; p < n_per_class; ++p, ++at) {
      ds.y[at] = c;
      for (int q = 0; q < dim; ++q) {
        const double mean = (q == c && q < informative_dims) ? separation : 0.0;
        ds.X(at, q) = mean + noise_sd * gauss(rng);
      }
    }
  }
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(const std::string& s, int line_no, std::size_t field) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ValidationError("csv: line " + std::to_string(line_no) + ": field " +
                          std::to_string(field) + " is not a number: \"" + s + "\"");
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2 || header.back() != "label")
    throw ValidationError("csv: line 1: header must be f0,...,f{d-1},label");
  const int d = static_cast<int>(header.size()) - 1;
  for (int q = 0; q < d; ++q)
    if (header[q] != "f" + std::to_string(q))
      throw ValidationError("csv: line 1: expected header field f" + std::to_string(q) +
                            ", got \"" + header[q] + "\"");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> tokens;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw ValidationError("csv: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    std::vector<double> row(d);
    for (int q = 0; q < d; ++q) row[q] = parse_double(fields[q], line_no, q);
    if (fields.back().empty())
      throw ValidationError("csv: line " + std::to_string(line_no) + ": empty label token");
    rows.push_back(std::move(row));
    tokens.push_back(fields.back());
  }
  if (rows.empty()) throw ValidationError("csv: " + path + " has no data rows");

  // distinct tokens, lexicographic, indexed from 0
  std::map<std::string, int> token_ids;
  for (const std::string& t : tokens)
    if (t != "?") token_ids.emplace(t, 0);
  int next = 0;
  for (auto& [_, id] : token_ids) id = next++;

  const int n = static_cast<int>(rows.size());
  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  ds.roles.resize(n);
  ds.num_classes = next;
  ds.class_names.reserve(token_ids.size());
  for (const auto& [tok, _] : token_ids) ds.class_names.push_back(tok);

  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < d; ++q) ds.X(i, q) = rows[i][q];
    if (tokens[i] == "?") {
      ds.y[i] = kUnknownLabel;
      ds.roles[i] = Role::TestUnlabeled;
    } else {
      ds.y[i] = token_ids[tokens[i]];
      ds.roles[i] = Role::Seed;
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  const int n = static_cast<int>(ds.n());
  const int d = static_cast<int>(ds.dim());
  if (n < 1 || d < 1) throw ValidationError("save_csv: empty dataset");
  if (!ds.X.allFinite()) throw ValidationError("save_csv: non-finite features");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("save_csv: cannot open " + path + " for writing");
  for (int q = 0; q < d; ++q) out << 'f' << q << ',';
  out << "label\n";
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < d; ++q) out << detail::format_g17(ds.X(i, q)) << ',';
    if (ds.y[i] == kUnknownLabel)
      out << "?";
    else
      out << ds.class_names.at(ds.y[i]);
    out << '\n';
  }
  if (!out) throw ValidationError("save_csv: write to " + path + " failed");
}

Dataset split_labels(const Dataset& ds, const SplitConfig& cfg, std::uint64_t seed) {
  const int m = cfg.labeled_per_class;
  if (m < 1) throw ConfigError("split_labels: labeled_per_class must be >= 1");
  if (!(cfg.val_fraction > 0.0) || !(cfg.val_fraction < 1.0))
    throw ConfigError("split_labels: val_fraction must lie in (0, 1)");
  const int n_val = static_cast<int>(std::ceil(cfg.val_fraction * m));
  const int n_seed = m - n_val;
  if (n_val < 1 || n_seed < 1)
    throw ConfigError("split_labels: split leaves an empty Seed or Validation set per class "
                      "(labeled_per_class=" + std::to_string(m) +
                      ", val_fraction=" + std::to_string(cfg.val_fraction) + ")");
  if (ds.num_classes < 2) throw ConfigError("split_labels: dataset needs >= 2 classes");

  Dataset out = ds;
  out.roles.assign(ds.n(), Role::TestUnlabeled);
  auto rng = make_rng(seed);
  for (int c = 0; c < ds.num_classes; ++c) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(ds.n()); ++i)
      if (ds.y[i] == c) idx.push_back(i);
    if (static_cast<int>(idx.size()) < m)
      throw ConfigError("split_labels: class " + std::to_string(c) + " has only " +
                        std::to_string(idx.size()) + " labeled points, need " + std::to_string(m));
    // partial Fisher-Yates over the class indices, in index order
    for (int t = 0; t < m; ++t) {
      std::uniform_int_distribution<int> pick(t, static_cast<int>(idx.size()) - 1);
      std::swap(idx[t], idx[pick(rng)]);
    }
    for (int t = 0; t < m; ++t) out.roles[idx[t]] = t < n_val ? Role::Validation : Role::Seed;
  }
  return out;
}

Matrix seed_label_matrix(const Dataset& ds) {
  if (ds.num_classes < 1) throw ValidationError("seed_label_matrix: dataset has no classes");
  Matrix Y0 = Matrix::Zero(ds.n(), ds.num_classes);
  for (int i = 0; i < static_cast<int>(ds.n()); ++i) {
    if (ds.roles[i] != Role::Seed) continue;
    if (ds.y[i] == kUnknownLabel || ds.y[i] < 0 || ds.y[i] >= ds.num_classes)
      throw ValidationError("seed_label_matrix: Seed point " + std::to_string(i) +
                            " lacks a valid label");
    Y0(i, ds.y[i]) = 1.0;
  }
  return Y0;
}

ValidationTargets validation_targets(const Dataset& ds) {
  if (ds.num_classes < 1) throw ValidationError("validation_targets: dataset has no classes");
  ValidationTargets vt;
  vt.Y = Matrix::Zero(ds.n(), ds.num_classes);
  for (int i = 0; i < static_cast<int>(ds.n()); ++i) {
    if (ds.roles[i] != Role::Validation) continue;
    if (ds.y[i] == kUnknownLabel || ds.y[i] < 0 || ds.y[i] >= ds.num_classes)
      throw ValidationError("validation_targets: Validation point " + std::to_string(i) +
                            " lacks a valid label");
    vt.indices.push_back(i);
    vt.Y(i, ds.y[i]) = 1.0;
  }
  return vt;
}

}  // namespace graphrep
