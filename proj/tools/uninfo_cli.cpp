// Command-line driver: corrupt, run, sweep, eval, plot, pretrain.
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "uninfo/experiment.hpp"
#include "uninfo/plots.hpp"

namespace {

using namespace uninfo;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NumericFailure: return 4;
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownKind:
    case ErrorCode::EmptyKinds:
    case ErrorCode::RankTooLarge:
    case ErrorCode::TooManyClasses: return 2;
    default: return 3;
  }
}

struct Common {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::string preset;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "experiment config (JSON)");
    cmd->add_option("--out", out, "output directory (overrides the config)");
    cmd->add_option("--seed", seeds, "run seed(s) (override the config)");
    cmd->add_option("--preset", preset, "objective preset")
        ->check(CLI::IsMember({"full", "ent_only", "ent_pl", "ent_unif_pl", "no_balancing"}));
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg = config.empty() ? parse_experiment_config(nlohmann::json::object())
                                          : load_experiment_config(config);
    if (!out.empty()) cfg.out = out;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!preset.empty()) cfg.preset = preset;
    return cfg;
  }
};

void print_report(const RunReport& report) {
  std::printf("%-16s %10s %10s\n", "kind", "mean", "std");
  for (const auto& k : report.summary) std::printf("%-16s %9.2f%% %9.2f\n", k.kind.c_str(), 100 * k.mean, 100 * k.std);
  std::printf("%-16s %9.2f%%\n", "mean", 100 * report.mean_over_kinds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time adaptation of a zero-shot classifier under sensor degradation"};
  app.require_subcommand(1);

  Common corrupt_opts, run_opts, eval_opts, sweep_opts, pretrain_opts;
  auto* corrupt = app.add_subcommand("corrupt", "materialize corrupted streams");
  corrupt_opts.attach(corrupt);
  auto* run = app.add_subcommand("run", "adapt on every (kind, seed) stream");
  run_opts.attach(run);
  auto* eval = app.add_subcommand("eval", "zero-shot evaluation without adaptation");
  eval_opts.attach(eval);
  auto* sweep = app.add_subcommand("sweep", "sensitivity sweep over lambda or i0");
  sweep_opts.attach(sweep);
  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep->add_option("--param", sweep_param, "lambda or i0")->required()->check(CLI::IsMember({"lambda", "i0"}));
  sweep->add_option("--values", sweep_values, "values to try")->required();
  auto* pretrain = app.add_subcommand("pretrain", "pre-train the toy encoder on clean synthetic shapes");
  pretrain_opts.attach(pretrain);
  auto* plot = app.add_subcommand("plot", "render SVG plots from CSV outputs");
  std::string plot_what, plot_out = ".";
  std::vector<std::string> plot_inputs;
  plot->add_option("--what", plot_what, "weights, spca or sweep")
      ->required()
      ->check(CLI::IsMember({"weights", "spca", "sweep"}));
  plot->add_option("--out", plot_out, "output directory");
  plot->add_option("inputs", plot_inputs, "input CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*corrupt) {
      for (const auto& s : cmd_corrupt(corrupt_opts.load())) {
        std::printf("%s %s %s\n", s.cache_hit ? "cached " : "written", s.spec.label().c_str(), s.path.string().c_str());
      }
    } else if (*run) {
      print_report(cmd_run(run_opts.load()));
    } else if (*eval) {
      print_report(cmd_eval(eval_opts.load()));
    } else if (*sweep) {
      const auto rows = cmd_sweep(sweep_opts.load(), parse_sweep_param(sweep_param), sweep_values);
      std::printf("%-10s %10s %10s\n", sweep_param.c_str(), "mean", "std");
      for (const auto& r : rows) std::printf("%-10g %9.2f%% %9.2f\n", r.value, 100 * r.mean, 100 * r.std);
    } else if (*pretrain) {
      const auto r = cmd_pretrain(pretrain_opts.load());
      std::printf("clean accuracy %.2f%%\n", 100 * r.clean_accuracy);
    } else if (*plot) {
      std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
      for (const auto& p : cmd_plot(inputs, parse_plot_kind(plot_what), plot_out)) std::printf("%s\n", p.string().c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
