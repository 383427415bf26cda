#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphrep/dataset.hpp"
#include "graphrep/training.hpp"

namespace graphrep {

/// Where the points come from: a generator or a CSV file.
struct DatasetSpec {
  enum class Kind { TwoMoons, Blobs, Csv };
  Kind kind = Kind::TwoMoons;

  // two_moons
  int n = 400;
  double noise_sd = 0.1;
  int nuisance_dims = 0;
  double nuisance_sd = 1.0;

  // blobs
  int n_per_class = 100;
  int classes = 2;
  int dim = 2;
  int informative_dims = 2;
  double separation = 1.0;
  // noise_sd shared with two_moons

  // csv
  std::string path;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  int output_dim = 2;
  int hidden_dim = 0;
  InitScheme init = InitScheme::Gaussian;
  double init_scale = 0.1;
};

/// One experiment: dataset, split, graph/propagation settings, model and
/// optimizer, an output directory, and the seed list. Loaded from a single
/// JSON file; --out and --seeds may override the file.
struct ExperimentConfig {
  DatasetSpec dataset;
  SplitConfig split;
  GraphConfig graph;
  PropagationConfig propagation;
  ModelSpec model;
  int epochs = 100;
  double lr = 0.1;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  bool dump_graph = false;  // CLI flag, not part of the config file
};

ExperimentConfig load_experiment_config(const std::string& path);
void apply_overrides(ExperimentConfig& cfg, const std::optional<std::string>& out_dir,
                     const std::vector<std::uint64_t>& seeds);

struct ReportRow {
  std::uint64_t seed = 0;
  double baseline_accuracy = 0.0;
  int abstain_count = 0;
  std::optional<double> learned_accuracy;
  std::optional<int> epochs_run;
  std::optional<int> best_epoch;
};

struct Stats {
  double mean = 0.0;
  double median = 0.0;
};

struct ReportAggregate {
  int seeds = 0;
  Stats baseline_accuracy;
  std::optional<Stats> learned_accuracy;
  std::optional<Stats> improvement;   // learned - baseline, per seed
  std::optional<int> wins;            // seeds with learned > baseline
};

struct Report {
  std::vector<ReportRow> rows;  // ordered by seed value
};

/// Aggregate statistics recomputed from the rows.
ReportAggregate aggregate_report(const Report& report);

/// Pretty JSON, rows plus aggregate. read_report rejects unknown fields.
void write_report(const Report& report, const std::string& path);
Report read_report(const std::string& path);

/// Writes dataset_seed<N>.csv plus a sidecar dataset_seed<N>.meta.json
/// recording the generator parameters and the exact generator seed used.
void run_generate(const ExperimentConfig& cfg);

/// Graph + propagation with the untrained identity embedding (d' = d);
/// accuracy scored on TestUnlabeled points with known labels, abstentions
/// as errors. Writes report.json into the output directory.
Report run_baseline(const ExperimentConfig& cfg);

/// Per seed: split, train, score the best model on the test points; writes
/// model_seed<N>.json, history_seed<N>.jsonl and report.json.
Report run_train(const ExperimentConfig& cfg);

/// Analytic gradient vs central finite differences on the configured
/// instance, reported per parameter block plus a step-size sweep.
struct GradcheckBlock {
  std::string name;
  Index coords = 0;
  double max_rel_err = 0.0;  // coords with |analytic| > 1e-8
  double max_abs_err = 0.0;  // coords with |analytic| <= 1e-8
  bool pass = false;
};
struct GradcheckResult {
  bool pass = false;
  std::vector<GradcheckBlock> blocks;
  std::vector<std::pair<double, double>> h_sweep;  // (h, max error at h)
};
GradcheckResult run_gradcheck(const ExperimentConfig& cfg);

/// Comparison rule shared by gradcheck and the tests: relative error
/// <= rel_tol where |analytic| > small, absolute error <= abs_tol elsewhere.
struct GradCompare {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool pass = true;
};
GradCompare compare_gradients(const Vector& analytic, const Vector& fd, double rel_tol = 1e-4,
                              double abs_tol = 1e-6, double small = 1e-8);

}  // namespace graphrep
