#include "graphrep/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "graphrep/errors.hpp"
#include "graphrep/graph.hpp"
#include "graphrep/propagation.hpp"
#include "graphrep/random.hpp"
#include "detail/number_format.hpp"

namespace graphrep {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail_cfg(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail_cfg(join_path(path, it.key()), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void read_int(const json& obj, const std::string& path, const char* key, int& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number_integer()) fail_cfg(join_path(path, key), "expected an integer");
    out = v->get<int>();
  }
}

void read_num(const json& obj, const std::string& path, const char* key, double& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number()) fail_cfg(join_path(path, key), "expected a number");
    out = v->get<double>();
  }
}

bool read_str(const json& obj, const std::string& path, const char* key, std::string& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) fail_cfg(join_path(path, key), "expected a string");
    out = v->get<std::string>();
    return true;
  }
  return false;
}

void parse_dataset(const json& obj, DatasetSpec& out) {
  std::string kind;
  if (!read_str(obj, "dataset", "kind", kind))
    fail_cfg("dataset.kind", "required (two_moons, blobs, or csv)");
  if (kind == "two_moons") {
    out.kind = DatasetSpec::Kind::TwoMoons;
    check_keys(obj, "dataset", {"kind", "n", "noise_sd", "nuisance_dims", "nuisance_sd"});
    read_int(obj, "dataset", "n", out.n);
    read_num(obj, "dataset", "noise_sd", out.noise_sd);
    read_int(obj, "dataset", "nuisance_dims", out.nuisance_dims);
    read_num(obj, "dataset", "nuisance_sd", out.nuisance_sd);
  } else if (kind == "blobs") {
    out.kind = DatasetSpec::Kind::Blobs;
    check_keys(obj, "dataset",
               {"kind", "n_per_class", "classes", "dim", "informative_dims", "separation",
                "noise_sd"});
    read_int(obj, "dataset", "n_per_class", out.n_per_class);
    read_int(obj, "dataset", "classes", out.classes);
    read_int(obj, "dataset", "dim", out.dim);
    read_int(obj, "dataset", "informative_dims", out.informative_dims);
    read_num(obj, "dataset", "separation", out.separation);
    read_num(obj, "dataset", "noise_sd", out.noise_sd);
  } else if (kind == "csv") {
    out.kind = DatasetSpec::Kind::Csv;
    check_keys(obj, "dataset", {"kind", "path"});
    if (!read_str(obj, "dataset", "path", out.path))
      fail_cfg("dataset.path", "required for kind csv");
  } else {
    fail_cfg("dataset.kind", "unknown kind \"" + kind + "\" (two_moons, blobs, or csv)");
  }
}

void parse_graph(const json& obj, GraphConfig& out) {
  check_keys(obj, "graph", {"k", "sigma_mode", "sigma"});
  read_int(obj, "graph", "k", out.k);
  std::string mode = "median";
  read_str(obj, "graph", "sigma_mode", mode);
  if (mode == "median")
    out.sigma_mode = SigmaMode::MedianHeuristic;
  else if (mode == "fixed")
    out.sigma_mode = SigmaMode::Fixed;
  else
    fail_cfg("graph.sigma_mode", "unknown mode \"" + mode + "\" (median or fixed)");
  const bool has_sigma = find(obj, "sigma") != nullptr;
  if (out.sigma_mode == SigmaMode::Fixed && !has_sigma)
    fail_cfg("graph.sigma", "required when sigma_mode is fixed");
  if (out.sigma_mode == SigmaMode::MedianHeuristic && has_sigma)
    fail_cfg("graph.sigma", "only valid when sigma_mode is fixed");
  read_num(obj, "graph", "sigma", out.sigma);
}

void parse_model(const json& obj, ModelSpec& out) {
  check_keys(obj, "model", {"kind", "output_dim", "hidden_dim", "init", "init_scale"});
  std::string kind = "linear";
  read_str(obj, "model", "kind", kind);
  if (kind == "linear")
    out.kind = ModelKind::Linear;
  else if (kind == "mlp1")
    out.kind = ModelKind::Mlp1;
  else
    fail_cfg("model.kind", "unknown kind \"" + kind + "\" (linear or mlp1)");
  read_int(obj, "model", "output_dim", out.output_dim);
  read_int(obj, "model", "hidden_dim", out.hidden_dim);
  if (out.kind == ModelKind::Linear && find(obj, "hidden_dim") != nullptr)
    fail_cfg("model.hidden_dim", "only valid for kind mlp1");
  std::string init = "gaussian";
  read_str(obj, "model", "init", init);
  if (init == "identity_pad")
    out.init = InitScheme::IdentityPad;
  else if (init == "gaussian")
    out.init = InitScheme::Gaussian;
  else
    fail_cfg("model.init", "unknown scheme \"" + init + "\" (identity_pad or gaussian)");
  read_num(obj, "model", "init_scale", out.init_scale);
}

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t base_seed) {
  switch (spec.kind) {
    case DatasetSpec::Kind::TwoMoons:
      return gen_two_moons(spec.n, spec.noise_sd, spec.nuisance_dims, spec.nuisance_sd,
                           derive_seed(base_seed, Stream::Dataset));
    case DatasetSpec::Kind::Blobs:
      return gen_blobs(spec.n_per_class, spec.classes, spec.dim, spec.informative_dims,
                       spec.separation, spec.noise_sd, derive_seed(base_seed, Stream::Dataset));
    case DatasetSpec::Kind::Csv:
      return load_csv(spec.path);
  }
  throw ConfigError("dataset: unknown kind");
}

std::vector<std::uint64_t> sorted_seeds(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty())
    throw ConfigError("config: seed list is empty (set \"seeds\" or pass --seeds)");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty())
    throw ConfigError("config: output directory not set (set \"out\" or pass --out)");
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + cfg.out_dir);
  return dir;
}

EmbeddingParams identity_params(int dim) {
  return init_params(ModelKind::Linear, dim, dim, 0, InitScheme::IdentityPad, 0.0, 0);
}

Dataset prepared_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset ds = make_dataset(cfg.dataset, seed);
  return split_labels(ds, cfg.split, derive_seed(seed, Stream::Split));
}

AccuracyStats evaluate_on_test(const EmbeddingParams& params, const Dataset& ds,
                               const GraphConfig& graph_cfg, const PropagationConfig& prop_cfg,
                               Graph* graph_out = nullptr) {
  const Matrix Y0 = seed_label_matrix(ds);
  const ForwardTrace trace = forward_pipeline(params, ds.X, graph_cfg, Y0, prop_cfg);
  if (graph_out) *graph_out = trace.graph;
  return masked_accuracy(predict(trace.scores()), ds, Role::TestUnlabeled);
}

void write_history(const TrainHistory& history, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
  for (const EpochRecord& r : history.records) {
    os << "{\"epoch\":" << r.epoch << ",\"loss\":" << detail::format_g17(r.loss)
       << ",\"val_accuracy\":" << detail::format_g17(r.val_accuracy)
       << ",\"grad_norm\":" << detail::format_g17(r.grad_norm) << "}\n";
  }
  if (!os) throw ValidationError("write to " + path.string() + " failed");
}

Stats stats_of(std::vector<double> values) {
  Stats s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

ordered_json stats_json(const Stats& s) {
  ordered_json o;
  o["mean"] = s.mean;
  o["median"] = s.median;
  return o;
}

Stats stats_from_json(const json& obj, const std::string& path) {
  if (!obj.is_object()) throw ValidationError("report: " + path + ": expected an object");
  check_keys(obj, path, {"mean", "median"});
  Stats s;
  const json* mean = find(obj, "mean");
  const json* median = find(obj, "median");
  if (!mean || !median || !mean->is_number() || !median->is_number())
    throw ValidationError("report: " + path + ": needs numeric mean and median");
  s.mean = mean->get<double>();
  s.median = median->get<double>();
  return s;
}

double accuracy_from_json(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v || !v->is_number())
    throw ValidationError("report: " + join_path(path, key) + ": expected a number");
  const double a = v->get<double>();
  if (!(a >= 0.0 && a <= 1.0))
    throw ValidationError("report: " + join_path(path, key) + ": accuracy outside [0,1]");
  return a;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: " + path + ": top level must be an object");

  ExperimentConfig cfg;
  try {
    check_keys(j, "",
               {"dataset", "split", "graph", "propagation", "model", "epochs", "lr", "out",
                "seeds"});
    if (const json* v = find(j, "dataset")) {
      if (!v->is_object()) fail_cfg("dataset", "expected an object");
      parse_dataset(*v, cfg.dataset);
    }
    if (const json* v = find(j, "split")) {
      if (!v->is_object()) fail_cfg("split", "expected an object");
      check_keys(*v, "split", {"labeled_per_class", "val_fraction"});
      read_int(*v, "split", "labeled_per_class", cfg.split.labeled_per_class);
      read_num(*v, "split", "val_fraction", cfg.split.val_fraction);
    }
    if (const json* v = find(j, "graph")) {
      if (!v->is_object()) fail_cfg("graph", "expected an object");
      parse_graph(*v, cfg.graph);
    }
    if (const json* v = find(j, "propagation")) {
      if (!v->is_object()) fail_cfg("propagation", "expected an object");
      check_keys(*v, "propagation", {"alpha", "iterations"});
      read_num(*v, "propagation", "alpha", cfg.propagation.alpha);
      read_int(*v, "propagation", "iterations", cfg.propagation.iterations);
    }
    if (const json* v = find(j, "model")) {
      if (!v->is_object()) fail_cfg("model", "expected an object");
      parse_model(*v, cfg.model);
    }
    read_int(j, "", "epochs", cfg.epochs);
    read_num(j, "", "lr", cfg.lr);
    read_str(j, "", "out", cfg.out_dir);
    if (const json* v = find(j, "seeds")) {
      if (!v->is_array()) fail_cfg("seeds", "expected an array of unsigned integers");
      for (const json& s : *v) {
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
          fail_cfg("seeds", "expected an array of unsigned integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::string>& out_dir,
                     const std::vector<std::uint64_t>& seeds) {
  if (out_dir) cfg.out_dir = *out_dir;
  if (!seeds.empty()) cfg.seeds = seeds;
}

ReportAggregate aggregate_report(const Report& report) {
  if (report.rows.empty()) throw ValidationError("report: no rows to aggregate");
  const bool learned = report.rows.front().learned_accuracy.has_value();
  for (const ReportRow& r : report.rows)
    if (r.learned_accuracy.has_value() != learned)
      throw ValidationError("report: rows mix baseline-only and trained entries");

  ReportAggregate agg;
  agg.seeds = static_cast<int>(report.rows.size());
  std::vector<double> base;
  base.reserve(report.rows.size());
  for (const ReportRow& r : report.rows) base.push_back(r.baseline_accuracy);
  agg.baseline_accuracy = stats_of(base);
  if (learned) {
    std::vector<double> acc, gain;
    int wins = 0;
    for (const ReportRow& r : report.rows) {
      acc.push_back(*r.learned_accuracy);
      gain.push_back(*r.learned_accuracy - r.baseline_accuracy);
      if (*r.learned_accuracy > r.baseline_accuracy) ++wins;
    }
    agg.learned_accuracy = stats_of(std::move(acc));
    agg.improvement = stats_of(std::move(gain));
    agg.wins = wins;
  }
  return agg;
}

void write_report(const Report& report, const std::string& path) {
  const ReportAggregate agg = aggregate_report(report);
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const ReportRow& r : report.rows) {
    ordered_json row;
    row["seed"] = r.seed;
    row["baseline_accuracy"] = r.baseline_accuracy;
    row["abstain_count"] = r.abstain_count;
    if (r.learned_accuracy) {
      row["learned_accuracy"] = *r.learned_accuracy;
      row["epochs_run"] = r.epochs_run.value_or(0);
      row["best_epoch"] = r.best_epoch.value_or(0);
    }
    j["rows"].push_back(std::move(row));
  }
  ordered_json a;
  a["seeds"] = agg.seeds;
  a["baseline_accuracy"] = stats_json(agg.baseline_accuracy);
  if (agg.learned_accuracy) a["learned_accuracy"] = stats_json(*agg.learned_accuracy);
  if (agg.improvement) a["improvement"] = stats_json(*agg.improvement);
  if (agg.wins) a["wins"] = *agg.wins;
  j["aggregate"] = std::move(a);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw ValidationError("write to " + path + " failed");
}

Report read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("report: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("report: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("report: top level must be an object");
  try {
    check_keys(j, "", {"rows", "aggregate"});
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }

  const json* rows = find(j, "rows");
  const json* agg = find(j, "aggregate");
  if (!rows || !rows->is_array()) throw ValidationError("report: rows must be an array");
  if (!agg || !agg->is_object()) throw ValidationError("report: aggregate must be an object");

  Report report;
  int at = 0;
  for (const json& r : *rows) {
    const std::string path_r = "rows[" + std::to_string(at++) + "]";
    if (!r.is_object()) throw ValidationError("report: " + path_r + ": expected an object");
    try {
      check_keys(r, path_r,
                 {"seed", "baseline_accuracy", "abstain_count", "learned_accuracy", "epochs_run",
                  "best_epoch"});
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }
    ReportRow row;
    const json* seed = find(r, "seed");
    if (!seed || !(seed->is_number_unsigned() ||
                   (seed->is_number_integer() && seed->get<std::int64_t>() >= 0)))
      throw ValidationError("report: " + path_r + ".seed: expected an unsigned integer");
    row.seed = seed->get<std::uint64_t>();
    row.baseline_accuracy = accuracy_from_json(r, path_r, "baseline_accuracy");
    const json* abst = find(r, "abstain_count");
    if (!abst || !abst->is_number_integer() || abst->get<int>() < 0)
      throw ValidationError("report: " + path_r + ".abstain_count: expected an integer >= 0");
    row.abstain_count = abst->get<int>();
    const bool has_learned = find(r, "learned_accuracy") != nullptr;
    const bool has_epochs = find(r, "epochs_run") != nullptr;
    const bool has_best = find(r, "best_epoch") != nullptr;
    if (has_learned != has_epochs || has_learned != has_best)
      throw ValidationError("report: " + path_r +
                            ": learned_accuracy, epochs_run, best_epoch must appear together");
    if (has_learned) {
      row.learned_accuracy = accuracy_from_json(r, path_r, "learned_accuracy");
      const json* ep = find(r, "epochs_run");
      const json* best = find(r, "best_epoch");
      if (!ep->is_number_integer() || !best->is_number_integer())
        throw ValidationError("report: " + path_r + ": epochs_run and best_epoch are integers");
      row.epochs_run = ep->get<int>();
      row.best_epoch = best->get<int>();
    }
    report.rows.push_back(std::move(row));
  }
  try {
    check_keys(*agg, "aggregate",
               {"seeds", "baseline_accuracy", "learned_accuracy", "improvement", "wins"});
    const json* seeds = find(*agg, "seeds");
    if (!seeds || !seeds->is_number_integer())
      throw ValidationError("report: aggregate.seeds: expected an integer");
    const json* b = find(*agg, "baseline_accuracy");
    if (!b) throw ValidationError("report: aggregate.baseline_accuracy: required");
    stats_from_json(*b, "aggregate.baseline_accuracy");
    if (const json* v = find(*agg, "learned_accuracy"))
      stats_from_json(*v, "aggregate.learned_accuracy");
    if (const json* v = find(*agg, "improvement")) stats_from_json(*v, "aggregate.improvement");
    if (const json* v = find(*agg, "wins"))
      if (!v->is_number_integer())
        throw ValidationError("report: aggregate.wins: expected an integer");
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  return report;
}

void run_generate(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == DatasetSpec::Kind::Csv)
    throw ConfigError("generate: dataset kind csv has nothing to generate");
  const std::vector<std::uint64_t> seeds = sorted_seeds(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  for (std::uint64_t seed : seeds) {
    const Dataset ds = make_dataset(cfg.dataset, seed);
    const std::string stem = "dataset_seed" + std::to_string(seed);
    save_csv(ds, (dir / (stem + ".csv")).string());

    // sidecar: exact generator parameters plus the derived seed the
    // generator consumed, enough to reproduce the CSV byte for byte
    ordered_json meta;
    if (cfg.dataset.kind == DatasetSpec::Kind::TwoMoons) {
      meta["kind"] = "two_moons";
      meta["n"] = cfg.dataset.n;
      meta["noise_sd"] = cfg.dataset.noise_sd;
      meta["nuisance_dims"] = cfg.dataset.nuisance_dims;
      meta["nuisance_sd"] = cfg.dataset.nuisance_sd;
    } else {
      meta["kind"] = "blobs";
      meta["n_per_class"] = cfg.dataset.n_per_class;
      meta["classes"] = cfg.dataset.classes;
      meta["dim"] = cfg.dataset.dim;
      meta["informative_dims"] = cfg.dataset.informative_dims;
      meta["separation"] = cfg.dataset.separation;
      meta["noise_sd"] = cfg.dataset.noise_sd;
    }
    meta["seed"] = seed;
    meta["generator_seed"] = derive_seed(seed, Stream::Dataset);
    std::ofstream os(dir / (stem + ".meta.json"), std::ios::binary);
    if (!os) throw ValidationError("cannot write sidecar for seed " + std::to_string(seed));
    os << meta.dump(2) << '\n';
  }
}

Report run_baseline(const ExperimentConfig& cfg) {
  const std::vector<std::uint64_t> seeds = sorted_seeds(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  Report report;
  for (std::uint64_t seed : seeds) {
    const Dataset ds = prepared_dataset(cfg, seed);
    Graph graph;
    const AccuracyStats st =
        evaluate_on_test(identity_params(static_cast<int>(ds.dim())), ds, cfg.graph,
                         cfg.propagation, cfg.dump_graph ? &graph : nullptr);
    if (cfg.dump_graph) {
      const fs::path p = dir / ("graph_seed" + std::to_string(seed) + ".edges");
      std::ofstream os(p, std::ios::binary);
      if (!os) throw ValidationError("cannot open " + p.string() + " for writing");
      dump_edges(graph, os);
    }
    ReportRow row;
    row.seed = seed;
    row.baseline_accuracy = st.accuracy;
    row.abstain_count = st.abstains;
    report.rows.push_back(row);
  }
  write_report(report, (dir / "report.json").string());
  return report;
}

Report run_train(const ExperimentConfig& cfg) {
  const std::vector<std::uint64_t> seeds = sorted_seeds(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  Report report;
  for (std::uint64_t seed : seeds) {
    const Dataset ds = prepared_dataset(cfg, seed);
    const AccuracyStats baseline =
        evaluate_on_test(identity_params(static_cast<int>(ds.dim())), ds, cfg.graph,
                         cfg.propagation);

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.lr = cfg.lr;
    tc.propagation = cfg.propagation;
    tc.graph = cfg.graph;
    tc.kind = cfg.model.kind;
    tc.output_dim = cfg.model.output_dim;
    tc.hidden_dim = cfg.model.hidden_dim;
    tc.init = cfg.model.init;
    tc.init_scale = cfg.model.init_scale;
    tc.seed = seed;
    const TrainResult result = train(ds, tc);
    const AccuracyStats learned =
        evaluate_on_test(result.params, ds, cfg.graph, cfg.propagation);

    const std::string tag = "_seed" + std::to_string(seed);
    save_params(result.params, (dir / ("model" + tag + ".json")).string());
    write_history(result.history, dir / ("history" + tag + ".jsonl"));

    ReportRow row;
    row.seed = seed;
    row.baseline_accuracy = baseline.accuracy;
    row.abstain_count = learned.abstains;
    row.learned_accuracy = learned.accuracy;
    row.epochs_run = static_cast<int>(result.history.records.size());
    row.best_epoch = result.history.best_epoch;
    report.rows.push_back(row);
  }
  write_report(report, (dir / "report.json").string());
  return report;
}

namespace {

Vector flatten_gradient(const EmbeddingParams& shape, const ParamGradient& grad) {
  Vector theta(param_count(shape));
  Index at = 0;
  for (Index r = 0; r < grad.w_out.rows(); ++r)
    for (Index c = 0; c < grad.w_out.cols(); ++c) theta[at++] = grad.w_out(r, c);
  for (Index r = 0; r < grad.w_hidden.rows(); ++r)
    for (Index c = 0; c < grad.w_hidden.cols(); ++c) theta[at++] = grad.w_hidden(r, c);
  for (Index r = 0; r < grad.b_hidden.size(); ++r) theta[at++] = grad.b_hidden[r];
  return theta;
}

}  // namespace

GradCompare compare_gradients(const Vector& analytic, const Vector& fd, double rel_tol,
                              double abs_tol, double small) {
  if (analytic.size() != fd.size())
    throw ValidationError("compare_gradients: size mismatch");
  GradCompare cmp;
  for (Index k = 0; k < analytic.size(); ++k) {
    const double err = std::abs(analytic[k] - fd[k]);
    if (std::abs(analytic[k]) > small) {
      const double rel = err / std::abs(analytic[k]);
      cmp.max_rel_err = std::max(cmp.max_rel_err, rel);
      if (rel > rel_tol) cmp.pass = false;
    } else {
      cmp.max_abs_err = std::max(cmp.max_abs_err, err);
      if (err > abs_tol) cmp.pass = false;
    }
  }
  return cmp;
}

GradcheckResult run_gradcheck(const ExperimentConfig& cfg) {
  const std::vector<std::uint64_t> seeds = sorted_seeds(cfg);
  const std::uint64_t seed = seeds.front();
  const Dataset ds = prepared_dataset(cfg, seed);
  const Matrix Y0 = seed_label_matrix(ds);
  const ValidationTargets vt = validation_targets(ds);
  const EmbeddingParams params =
      init_params(cfg.model.kind, static_cast<int>(ds.dim()), cfg.model.output_dim,
                  cfg.model.hidden_dim, cfg.model.init, cfg.model.init_scale,
                  derive_seed(seed, Stream::Init));

  const ForwardTrace trace = forward_pipeline(params, ds.X, cfg.graph, Y0, cfg.propagation);
  const FrozenStructure structure = freeze_structure(trace);
  const ParamGradient grad = backward(trace, params, ds.X, vt.indices, vt.Y);
  const Vector analytic = flatten_gradient(params, grad);

  const auto closure = [&](const EmbeddingParams& p) {
    return frozen_loss(p, ds.X, structure, Y0, cfg.propagation, vt.indices, vt.Y);
  };
  const Vector fd = finite_diff_grad(params, closure, 1e-5);

  GradcheckResult result;
  result.pass = true;
  const Index n_out = params.w_out.size();
  const Index n_hid = params.w_hidden.size();
  const Index n_bias = params.b_hidden.size();
  const struct {
    const char* name;
    Index offset;
    Index count;
  } blocks[] = {{"w_out", 0, n_out}, {"w_hidden", n_out, n_hid},
                {"b_hidden", n_out + n_hid, n_bias}};
  for (const auto& blk : blocks) {
    if (blk.count == 0) continue;
    const GradCompare cmp = compare_gradients(analytic.segment(blk.offset, blk.count),
                                              fd.segment(blk.offset, blk.count));
    GradcheckBlock out;
    out.name = blk.name;
    out.coords = blk.count;
    out.max_rel_err = cmp.max_rel_err;
    out.max_abs_err = cmp.max_abs_err;
    out.pass = cmp.pass;
    result.pass = result.pass && cmp.pass;
    result.blocks.push_back(out);
  }
  for (double h : {1e-4, 1e-5, 1e-6}) {
    const Vector fdh = finite_diff_grad(params, closure, h);
    result.h_sweep.emplace_back(h, (analytic - fdh).cwiseAbs().maxCoeff());
  }
  return result;
}

}  // namespace graphrep
