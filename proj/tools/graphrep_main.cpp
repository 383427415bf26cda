#include <charconv>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "graphrep/errors.hpp"
#include "graphrep/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& arg) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= arg.size()) {
    std::size_t pos = arg.find(',', start);
    if (pos == std::string::npos) pos = arg.size();
    const std::string token = arg.substr(start, pos - start);
    std::uint64_t value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw graphrep::ConfigError("--seeds: \"" + token + "\" is not an unsigned integer");
    seeds.push_back(value);
    if (pos == arg.size()) break;
    start = pos + 1;
  }
  return seeds;
}

struct CommonArgs {
  std::string config;
  std::string out;
  std::string seeds;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config, "experiment config JSON file")->required();
  cmd->add_option("--out", args.out, "output directory (overrides the config)");
  cmd->add_option("--seeds", args.seeds, "comma-separated seeds (override the config)");
}

graphrep::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  graphrep::ExperimentConfig cfg = graphrep::load_experiment_config(args.config);
  const std::optional<std::string> out =
      args.out.empty() ? std::nullopt : std::optional<std::string>(args.out);
  const std::vector<std::uint64_t> seeds =
      args.seeds.empty() ? std::vector<std::uint64_t>{} : parse_seed_list(args.seeds);
  graphrep::apply_overrides(cfg, out, seeds);
  return cfg;
}

void print_report(const graphrep::Report& report, const std::string& out_dir) {
  const graphrep::ReportAggregate agg = graphrep::aggregate_report(report);
  for (const graphrep::ReportRow& row : report.rows) {
    std::printf("seed %llu: baseline %.4f", static_cast<unsigned long long>(row.seed),
                row.baseline_accuracy);
    if (row.learned_accuracy)
      std::printf("  learned %.4f  (best epoch %d/%d)", *row.learned_accuracy,
                  row.best_epoch.value_or(0), row.epochs_run.value_or(0));
    std::printf("  abstains %d\n", row.abstain_count);
  }
  std::printf("aggregate over %d seeds: baseline mean %.4f median %.4f", agg.seeds,
              agg.baseline_accuracy.mean, agg.baseline_accuracy.median);
  if (agg.learned_accuracy)
    std::printf("; learned mean %.4f median %.4f; improvement median %+.4f; wins %d/%d",
                agg.learned_accuracy->mean, agg.learned_accuracy->median,
                agg.improvement->median, agg.wins.value_or(0), agg.seeds);
  std::printf("\nreport written to %s/report.json\n", out_dir.c_str());
}

int print_gradcheck(const graphrep::GradcheckResult& result) {
  std::printf("%-10s %7s %14s %14s %7s\n", "block", "coords", "max_rel_err", "max_abs_err",
              "status");
  for (const graphrep::GradcheckBlock& blk : result.blocks)
    std::printf("%-10s %7lld %14.3e %14.3e %7s\n", blk.name.c_str(),
                static_cast<long long>(blk.coords), blk.max_rel_err, blk.max_abs_err,
                blk.pass ? "PASS" : "FAIL");
  for (const auto& [h, err] : result.h_sweep)
    std::printf("h=%.0e: max abs err %.3e\n", h, err);
  std::printf("gradcheck: %s\n", result.pass ? "PASS" : "FAIL");
  return result.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learns a vector representation whose similarity graph propagates labels well"};
  app.require_subcommand(1);

  CommonArgs generate_args, baseline_args, train_args, gradcheck_args;
  bool dump_graph = false;

  CLI::App* cmd_generate =
      app.add_subcommand("generate", "write per-seed dataset CSVs plus sidecar metadata");
  add_common(cmd_generate, generate_args);

  CLI::App* cmd_baseline =
      app.add_subcommand("baseline", "propagation accuracy of the raw euclidean graph");
  add_common(cmd_baseline, baseline_args);
  cmd_baseline->add_flag("--dump-graph", dump_graph, "write per-seed edge lists");

  CLI::App* cmd_train =
      app.add_subcommand("train", "learn the representation and compare against the baseline");
  add_common(cmd_train, train_args);

  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "analytic gradient vs central finite differences");
  add_common(cmd_gradcheck, gradcheck_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_generate->parsed()) {
      const graphrep::ExperimentConfig cfg = load_with_overrides(generate_args);
      graphrep::run_generate(cfg);
      std::printf("wrote %zu dataset(s) to %s\n", cfg.seeds.size(), cfg.out_dir.c_str());
      return 0;
    }
    if (cmd_baseline->parsed()) {
      graphrep::ExperimentConfig cfg = load_with_overrides(baseline_args);
      cfg.dump_graph = dump_graph;
      print_report(graphrep::run_baseline(cfg), cfg.out_dir);
      return 0;
    }
    if (cmd_train->parsed()) {
      const graphrep::ExperimentConfig cfg = load_with_overrides(train_args);
      print_report(graphrep::run_train(cfg), cfg.out_dir);
      return 0;
    }
    const graphrep::ExperimentConfig cfg = load_with_overrides(gradcheck_args);
    return print_gradcheck(graphrep::run_gradcheck(cfg));
  } catch (const graphrep::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
