#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphrep/types.hpp"

namespace graphrep {

/// Seed points feed the propagation; Validation points are the held-out loss
/// targets; TestUnlabeled points receive predictions (their label, when the
/// generator kept one, is used only for scoring).
enum class Role : std::uint8_t { Seed, Validation, TestUnlabeled };

struct Dataset {
  Matrix X;                  // n x d
  std::vector<int> y;        // class index, or kUnknownLabel
  std::vector<Role> roles;
  int num_classes = 0;
  std::vector<std::string> class_names;

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

/// Two interleaved half circles: upper (cos t, sin t), lower
/// (1 - cos t, 0.5 - sin t), t uniform in [0, pi], n/2 points each, with
/// isotropic noise on the two informative dims and `nuisance_dims` extra
/// coordinates of pure N(0, nuisance_sd^2) noise appended.
Dataset gen_two_moons(int n, double noise_sd, int nuisance_dims, double nuisance_sd,
                      std::uint64_t seed);

/// Gaussian blobs: class j mean = separation * e_j restricted to the first
/// informative_dims coordinates, isotropic noise everywhere.
Dataset gen_blobs(int n_per_class, int classes, int dim, int informative_dims, double separation,
                  double noise_sd, std::uint64_t seed);

/// CSV with header f0,...,f{d-1},label; label is a class token or `?`.
/// Distinct tokens are sorted lexicographically and indexed from 0. Known
/// labels load as Seed (re-split with split_labels), `?` as TestUnlabeled.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

struct SplitConfig {
  int labeled_per_class = 10;
  double val_fraction = 0.5;  // in (0,1); must leave >=1 Seed and >=1 Validation per class
};

/// Per class, samples labeled_per_class known-label points without
/// replacement (seeded); the first ceil(val_fraction * labeled_per_class) of
/// them in sampled order become Validation, the rest Seed. Every remaining
/// point becomes TestUnlabeled with its label kept for scoring.
Dataset split_labels(const Dataset& ds, const SplitConfig& cfg, std::uint64_t seed);

/// n x c matrix with one-hot rows on Seed points, zero rows elsewhere.
Matrix seed_label_matrix(const Dataset& ds);

/// Validation row indices plus an n x c matrix one-hot on exactly those rows.
struct ValidationTargets {
  std::vector<int> indices;
  Matrix Y;
};
ValidationTargets validation_targets(const Dataset& ds);

}  // namespace graphrep
