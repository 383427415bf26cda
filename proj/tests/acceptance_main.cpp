// Acceptance harness: one PASS/FAIL line per criterion, exit code = number of
// failed criteria. argv[1] is the CLI binary, argv[2] the shipped configs dir.
//
// Criteria 5 and 6 drive the real CLI end to end on the shipped benchmark
// configs; everything else exercises the library directly. All tolerances are
// pinned here as constants.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "graphrep/dataset.hpp"
#include "graphrep/embedding.hpp"
#include "graphrep/experiment.hpp"
#include "graphrep/graph.hpp"
#include "graphrep/propagation.hpp"
#include "graphrep/random.hpp"
#include "graphrep/training.hpp"
#include "test_helpers.hpp"

using namespace graphrep;
using test::read_file;
using test::TempDir;

namespace {

// pinned tolerances and thresholds
constexpr double kGradFdStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsTol = 1e-6;
constexpr double kGradSmall = 1e-8;
constexpr double kPropagationTol = 1e-8;
constexpr double kRotationWeightTol = 1e-9;
constexpr double kScaleRelTol = 1e-12;
constexpr int kBenchmarkMinWins = 8;
constexpr double kBenchmarkMinMedianGain = 0.10;
constexpr double kNullBandLo = 0.35;
constexpr double kNullBandHi = 0.65;
constexpr double kStationaryGradNorm = 1e-6;
constexpr double kCurvatureFactor = 5.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

int g_failures = 0;

// budget_s <= 0 means the criterion pins no runtime limit
template <typename Fn>
void run_criterion(int num, const char* title, double budget_s, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = fn();
  } catch (const std::exception& e) {
    out = {false, std::string("unexpected exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = budget_s <= 0.0 || secs < budget_s;
  const bool pass = out.pass && in_budget;
  if (!pass) ++g_failures;
  std::string timing = fmt("%.2fs", secs);
  if (budget_s > 0.0) timing += fmt(", limit %.0fs", budget_s);
  std::printf("[%s] criterion %d: %s: %s (%s)\n", pass ? "PASS" : "FAIL", num, title,
              out.detail.c_str(), timing.c_str());
  std::fflush(stdout);
}

int run_cli(const std::string& cli, const std::string& args, const std::string& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle: 20 Linear + 10 Mlp1 instances, n=12, d=4, d'=2, k=3,
//    T=5, alpha=0.8; analytic vs central differences at h=1e-5.

struct Instance {
  Dataset ds;
  Matrix Y0;
  ValidationTargets vt;
  GraphConfig graph;
  PropagationConfig prop;
};

Instance small_instance(std::uint64_t seed) {
  Instance inst;
  const Dataset raw = gen_blobs(6, 2, 4, 2, 2.0, 0.5, seed);
  inst.ds = split_labels(raw, SplitConfig{4, 0.5}, seed + 1);
  inst.Y0 = seed_label_matrix(inst.ds);
  inst.vt = validation_targets(inst.ds);
  inst.graph.k = 3;
  inst.prop.alpha = 0.8;
  inst.prop.iterations = 5;
  return inst;
}

Vector gradient_as_vector(const EmbeddingParams& like, const ParamGradient& grad) {
  EmbeddingParams g = like;
  g.w_out = grad.w_out;
  if (like.kind == ModelKind::Mlp1) {
    g.w_hidden = grad.w_hidden;
    g.b_hidden = grad.b_hidden;
  }
  return flatten_params(g);
}

Outcome criterion_gradient_oracle() {
  int agreed = 0, total = 0;
  double worst_rel = 0.0, worst_abs = 0.0;

  auto check_one = [&](ModelKind kind, std::uint64_t ds_seed, std::uint64_t init_seed) {
    const Instance inst = small_instance(ds_seed);
    const int hidden = kind == ModelKind::Mlp1 ? 3 : 0;
    const EmbeddingParams params =
        init_params(kind, 4, 2, hidden, InitScheme::Gaussian, 1.0, init_seed);

    const ForwardTrace trace =
        forward_pipeline(params, inst.ds.X, inst.graph, inst.Y0, inst.prop);
    const FrozenStructure frozen = freeze_structure(trace);
    const ParamGradient grad =
        backward(trace, params, inst.ds.X, inst.vt.indices, inst.vt.Y);
    const Vector analytic = gradient_as_vector(params, grad);

    const Vector fd = finite_diff_grad(
        params,
        [&](const EmbeddingParams& p) {
          return frozen_loss(p, inst.ds.X, frozen, inst.Y0, inst.prop, inst.vt.indices,
                             inst.vt.Y);
        },
        kGradFdStep);

    const GradCompare cmp =
        compare_gradients(analytic, fd, kGradRelTol, kGradAbsTol, kGradSmall);
    worst_rel = std::max(worst_rel, cmp.max_rel_err);
    worst_abs = std::max(worst_abs, cmp.max_abs_err);
    ++total;
    if (cmp.pass) ++agreed;
  };

  for (std::uint64_t s = 0; s < 20; ++s) check_one(ModelKind::Linear, 1000 + s, 2000 + s);
  for (std::uint64_t s = 0; s < 10; ++s) check_one(ModelKind::Mlp1, 3000 + s, 4000 + s);

  return {agreed == total,
          fmt("%d/%d instances agree (max rel err %.2e vs %.0e, max abs err %.2e vs %.0e)",
              agreed, total, worst_rel, kGradRelTol, worst_abs, kGradAbsTol)};
}

// ---------------------------------------------------------------------------
// 2. Propagation equivalence on 10 random graphs (n <= 50), T=120,
//    alpha in {0.5, 0.9}.

Eigen::SparseMatrix<double> random_dense_operator(int n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> weight(0.2, 1.0);
  Graph g;
  g.n = n;
  g.sigma_sq = 1.0;
  g.degrees = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) {
        const double w = weight(rng);
        g.edges.push_back({i, j});
        g.weights.push_back(w);
        g.degrees[i] += w;
        g.degrees[j] += w;
      }
  return sym_normalize(g).S;
}

Matrix random_labels(int n, int classes, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  Matrix Y0 = Matrix::Zero(n, classes);
  for (int i = 0; i < n; ++i)
    if (u(rng) < 0.3) Y0(i, cls(rng)) = 1.0;
  if (Y0.sum() == 0.0) Y0(0, 0) = 1.0;
  return Y0;
}

Outcome criterion_propagation_equivalence() {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int n = 20 + (t * 7) % 31;  // 20..50
    const auto S = random_dense_operator(n, 600 + t);
    const Matrix Y0 = random_labels(n, 3, 700 + t);
    for (const double alpha : {0.5, 0.9}) {
      PropagationConfig cfg;
      cfg.alpha = alpha;
      cfg.iterations = 120;
      const Matrix iterative = propagate_iterative(S, Y0, cfg).scores();
      const Matrix closed = propagate_closed_form(S, Y0, alpha);
      worst = std::max(worst, (iterative - closed).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= kPropagationTol,
          fmt("max |iterative - closed| = %.2e over 10 graphs x alpha {0.5, 0.9} (limit %.0e)",
              worst, kPropagationTol)};
}

// ---------------------------------------------------------------------------
// 3. Metric invariance: graphs built from QW and W agree; predictions match.

Outcome criterion_metric_invariance() {
  GraphConfig gc;
  gc.k = 5;
  PropagationConfig pc;
  pc.alpha = 0.9;
  pc.iterations = 30;
  Matrix Y0 = Matrix::Zero(40, 3);
  for (int i = 0; i < 6; ++i) Y0(i, i % 3) = 1.0;

  int mismatched_edges = 0, mismatched_preds = 0;
  double worst_w = 0.0;
  for (int p = 0; p < 5; ++p) {
    const Matrix X = test::randn(40, 6, 9000 + p);
    const EmbeddingParams params =
        init_params(ModelKind::Linear, 6, 3, 0, InitScheme::Gaussian, 0.5, 9100 + p);
    const Graph base = build_graph(embed(params, X), gc);
    const Prediction base_pred =
        predict(propagate_iterative(sym_normalize(base).S, Y0, pc).scores());

    for (int q = 0; q < 5; ++q) {
      EmbeddingParams rotated = params;
      rotated.w_out = test::random_orthogonal(3, 9200 + 10 * p + q) * params.w_out;
      const Graph g2 = build_graph(embed(rotated, X), gc);
      if (g2.edges != base.edges) {
        ++mismatched_edges;
        continue;
      }
      for (std::size_t e = 0; e < g2.weights.size(); ++e)
        worst_w = std::max(worst_w, std::abs(g2.weights[e] - base.weights[e]));
      const Prediction pred =
          predict(propagate_iterative(sym_normalize(g2).S, Y0, pc).scores());
      if (pred.labels != base_pred.labels || pred.abstain != base_pred.abstain)
        ++mismatched_preds;
    }
  }

  const bool pass =
      mismatched_edges == 0 && mismatched_preds == 0 && worst_w <= kRotationWeightTol;
  return {pass,
          fmt("25 rotated graphs: %d edge-set mismatches, max weight diff %.2e (limit %.0e), "
              "%d prediction mismatches",
              mismatched_edges, worst_w, kRotationWeightTol, mismatched_preds)};
}

// ---------------------------------------------------------------------------
// 4. Scale absorption: W / sigma scaled together leave weights unchanged.

Outcome criterion_scale_absorption() {
  const Matrix Z = test::randn(30, 4, 777);
  GraphConfig base;
  base.k = 5;
  base.sigma_mode = SigmaMode::Fixed;
  base.sigma = 0.9;
  GraphConfig scaled = base;
  scaled.sigma = 0.9 * 3.0;  // sigma^2 multiplied by 9

  const Graph ga = build_graph(Z, base);
  const Graph gb = build_graph(3.0 * Z, scaled);
  if (ga.edges != gb.edges) return {false, "edge sets differ under scaling"};

  double worst = 0.0;
  for (std::size_t e = 0; e < ga.weights.size(); ++e)
    worst = std::max(worst, std::abs(ga.weights[e] - gb.weights[e]) / ga.weights[e]);
  return {worst <= kScaleRelTol,
          fmt("max relative weight change %.2e over %zu edges (limit %.0e)", worst,
              ga.weights.size(), kScaleRelTol)};
}

// ---------------------------------------------------------------------------
// 5. Designed benchmark: nuisance two-moons, learned vs euclidean baseline.

Outcome criterion_nuisance_benchmark(const std::string& cli, const std::string& configs,
                                     const TempDir& tmp) {
  const std::string out = tmp.file("nuisance_out");
  const int code = run_cli(cli, "train \"" + configs + "/twomoons_nuisance.json\" --out \"" +
                                    out + "\"",
                           tmp.file("nuisance.log"));
  if (code != 0) return {false, fmt("train exited with code %d", code)};

  const Report report = read_report(out + "/report.json");
  const ReportAggregate agg = aggregate_report(report);
  if (!agg.wins || !agg.improvement) return {false, "report lacks learned-vs-baseline stats"};

  const bool pass =
      *agg.wins >= kBenchmarkMinWins && agg.improvement->median >= kBenchmarkMinMedianGain;
  return {pass, fmt("wins %d/%d (need >= %d), median improvement %+.3f (need >= %+.3f)",
                    *agg.wins, agg.seeds, kBenchmarkMinWins, agg.improvement->median,
                    kBenchmarkMinMedianGain)};
}

// ---------------------------------------------------------------------------
// 6. Null-task sanity: separation 0 must stay near chance for both methods.

Outcome criterion_null_task(const std::string& cli, const std::string& configs,
                            const TempDir& tmp) {
  const std::string out = tmp.file("null_out");
  const int code =
      run_cli(cli, "train \"" + configs + "/blobs_null.json\" --out \"" + out + "\"",
              tmp.file("null.log"));
  if (code != 0) return {false, fmt("train exited with code %d", code)};

  const Report report = read_report(out + "/report.json");
  double lo = 1.0, hi = 0.0;
  int outside = 0;
  int checked = 0;
  for (const ReportRow& row : report.rows) {
    for (const double acc : {row.baseline_accuracy, row.learned_accuracy.value_or(-1.0)}) {
      if (acc < 0.0) return {false, "report row lacks a learned accuracy"};
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
      if (acc < kNullBandLo || acc > kNullBandHi) ++outside;
      ++checked;
    }
  }
  return {outside == 0 && checked == 20,
          fmt("%d/%d accuracies inside [%.2f, %.2f], observed range [%.3f, %.3f]",
              checked - outside, checked, kNullBandLo, kNullBandHi, lo, hi)};
}

// ---------------------------------------------------------------------------
// 7. Determinism: two identical train runs, byte-identical artifacts.

Outcome criterion_determinism(const std::string& cli, const std::string& configs,
                              const TempDir& tmp) {
  const std::string out_a = tmp.file("det_a");
  const std::string out_b = tmp.file("det_b");
  const std::string cfg = configs + "/determinism_small.json";
  if (run_cli(cli, "train \"" + cfg + "\" --out \"" + out_a + "\"", tmp.file("det_a.log")) != 0)
    return {false, "first train run failed"};
  if (run_cli(cli, "train \"" + cfg + "\" --out \"" + out_b + "\"", tmp.file("det_b.log")) != 0)
    return {false, "second train run failed"};

  std::vector<std::string> names = {"report.json"};
  for (const auto& entry : std::filesystem::directory_iterator(out_a)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("model_seed", 0) == 0) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  if (names.size() < 2) return {false, "expected model files next to report.json"};

  int identical = 0;
  for (const std::string& name : names) {
    const std::string a = read_file(out_a + "/" + name);
    const std::string b = read_file(out_b + "/" + name);
    if (!a.empty() && a == b) ++identical;
  }
  return {identical == static_cast<int>(names.size()),
          fmt("%d/%zu artifacts byte-identical across runs", identical, names.size())};
}

// ---------------------------------------------------------------------------
// 8. Stationarity probe: at grad_norm < 1e-6, loss moves by <= 5 h^2 c_hat
//    along 10 random unit directions, h in {1e-3, 1e-4}, where c_hat is the
//    largest second difference observed in the probe itself at h = 1e-3.

Outcome criterion_stationarity() {
  const Instance inst = small_instance(42);
  EmbeddingParams params = init_params(ModelKind::Linear, 4, 2, 0, InitScheme::Gaussian, 0.5, 44);
  const ForwardTrace trace = forward_pipeline(params, inst.ds.X, inst.graph, inst.Y0, inst.prop);
  const FrozenStructure frozen = freeze_structure(trace);

  auto eval = [&](const EmbeddingParams& p) {
    return frozen_loss(p, inst.ds.X, frozen, inst.Y0, inst.prop, inst.vt.indices, inst.vt.Y);
  };

  // descend the frozen objective to a stationary point with a backtracking
  // line search; the analytic gradient here is the one criterion 1 certifies
  double loss = 0.0;
  ParamGradient grad;
  std::tie(loss, grad) = frozen_loss_and_grad(params, inst.ds.X, frozen, inst.Y0, inst.prop,
                                              inst.vt.indices, inst.vt.Y);
  double grad_norm = grad.norm();
  double step = 1.0;
  for (int it = 0; it < 50000 && grad_norm >= 1e-8; ++it) {
    double t = step * 2.0;
    EmbeddingParams candidate;
    double cand_loss = 0.0;
    while (true) {
      candidate = sgd_step(params, grad, t);
      cand_loss = eval(candidate);
      if (cand_loss <= loss - 1e-4 * t * grad_norm * grad_norm) break;
      t *= 0.5;
      if (t < 1e-18) break;
    }
    if (t < 1e-18) break;  // line search exhausted: flat to machine precision
    params = candidate;
    step = t;
    std::tie(loss, grad) = frozen_loss_and_grad(params, inst.ds.X, frozen, inst.Y0, inst.prop,
                                                inst.vt.indices, inst.vt.Y);
    grad_norm = grad.norm();
  }
  if (grad_norm >= kStationaryGradNorm)
    return {false, fmt("failed to reach stationarity: grad_norm %.2e >= %.0e", grad_norm,
                       kStationaryGradNorm)};

  const Vector theta = flatten_params(params);
  const double L0 = eval(params);
  auto eval_at = [&](const Vector& point) {
    EmbeddingParams p = params;
    unflatten_params(point, p);
    return eval(p);
  };

  auto rng = make_rng(derive_seed(42, Stream::Probe));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int dims = static_cast<int>(theta.size());
  std::vector<Vector> dirs;
  for (int d = 0; d < 10; ++d) {
    Vector dir(dims);
    for (int i = 0; i < dims; ++i) dir[i] = normal(rng);
    dirs.push_back(dir.normalized());
  }

  // curvature bound from the probe itself, at the larger step
  const double h_probe = 1e-3;
  double c_hat = 0.0;
  for (const Vector& dir : dirs) {
    const double lp = eval_at(theta + h_probe * dir);
    const double lm = eval_at(theta - h_probe * dir);
    c_hat = std::max(c_hat, std::abs(lp - 2.0 * L0 + lm) / (h_probe * h_probe));
  }

  double worst_ratio = 0.0;
  for (const Vector& dir : dirs)
    for (const double h : {1e-3, 1e-4}) {
      const double bound = kCurvatureFactor * h * h * c_hat;
      for (const double sign : {1.0, -1.0}) {
        const double delta = std::abs(eval_at(theta + sign * h * dir) - L0);
        worst_ratio = std::max(worst_ratio, delta / bound);
      }
    }
  return {worst_ratio <= 1.0,
          fmt("grad_norm %.2e, curvature bound %.3e, max |dL| / (5 h^2 c) = %.3f", grad_norm,
              c_hat, worst_ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <cli-binary> <configs-dir>\n", argv[0]);
    return 70;
  }
  const std::string cli = argv[1];
  const std::string configs = argv[2];
  TempDir tmp("acceptance");

  run_criterion(1, "gradient oracle (30 instances)", 30.0, criterion_gradient_oracle);
  run_criterion(2, "propagation equivalence", 5.0, criterion_propagation_equivalence);
  run_criterion(3, "metric invariance under rotation", 5.0, criterion_metric_invariance);
  run_criterion(4, "scale absorption", 1.0, criterion_scale_absorption);
  run_criterion(5, "nuisance two-moons benchmark", 600.0,
                [&] { return criterion_nuisance_benchmark(cli, configs, tmp); });
  run_criterion(6, "null-task sanity band", 120.0,
                [&] { return criterion_null_task(cli, configs, tmp); });
  run_criterion(7, "byte-identical reruns", 0.0,
                [&] { return criterion_determinism(cli, configs, tmp); });
  run_criterion(8, "stationarity probe", 0.0, criterion_stationarity);

  if (g_failures > 0)
    std::printf("%d of 8 criteria failed\n", g_failures);
  else
    std::printf("all 8 criteria passed\n");
  return g_failures;
}
