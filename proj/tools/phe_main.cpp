// Command-line front end: instance generation, experiments, verification
// suites and plotting.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "phe/config.hpp"
#include "phe/error.hpp"
#include "phe/harness.hpp"
#include "phe/plot.hpp"
#include "phe/verification.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> stride;
  std::string suite;
  std::vector<std::string> inputs;
};

std::size_t resolve_jobs(const Options& opts, std::size_t fallback) {
  if (opts.jobs) return *opts.jobs;
  if (const char* env = std::getenv("PHE_JOBS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw phe::ConfigError(fmt::format("PHE_JOBS='{}' is not a count", env));
    }
  }
  return fallback;
}

phe::ExperimentConfig load_experiment(const Options& opts) {
  if (opts.config.empty()) throw phe::ConfigError("--config is required");
  auto cfg = phe::experiment_config_from_json(phe::read_json_file(opts.config));
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.stride) cfg.stride = *opts.stride;
  cfg.jobs = resolve_jobs(opts, cfg.jobs);
  try {
    cfg.validate();
  } catch (const phe::InvalidParameter& e) {
    throw phe::ConfigError(e.what());
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << contents;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

std::string experiment_tag(const phe::ExperimentConfig& cfg) {
  return fmt::format("{}_d{}", phe::to_string(cfg.kind), cfg.d);
}

int cmd_gen(const Options& opts) {
  const auto cfg = load_experiment(opts);
  for (std::size_t i = 0; i < cfg.num_instances; ++i) {
    const auto inst = phe::experiment_instance(cfg, i);
    write_file(fs::path(opts.out) / fmt::format("instance_{}_{:04}.json", experiment_tag(cfg), i),
               inst.to_json().dump(2) + "\n");
  }
  std::cerr << fmt::format("wrote {} instances to {}\n", cfg.num_instances, opts.out);
  return 0;
}

int cmd_run(const Options& opts) {
  const auto cfg = load_experiment(opts);
  const auto result = phe::run_experiment(cfg);

  std::ostringstream runs, agg;
  phe::write_runs_csv(runs, result.records, cfg.stride);
  phe::write_aggregate_csv(agg, result.curves, cfg.stride);
  const std::string tag = experiment_tag(cfg);
  write_file(fs::path(opts.out) / fmt::format("runs_{}.csv", tag), runs.str());
  write_file(fs::path(opts.out) / fmt::format("aggregate_{}.csv", tag), agg.str());

  for (const auto& c : result.curves) {
    if (c.mean.empty()) continue;
    std::cerr << fmt::format("{:>16}  regret {:10.3f} +- {:.3f}  ({} instances)\n", c.policy_id,
                             c.mean.back(), c.stderr_.back(), c.num_instances);
  }
  if (result.any_failed()) {
    for (const auto& r : result.records)
      if (r.failed) std::cerr << "episode failed: " << r.error << "\n";
    return kExitFailure;
  }
  return 0;
}

int cmd_verify(const Options& opts) {
  nlohmann::json params;
  if (!opts.config.empty()) params = phe::read_json_file(opts.config);
  const std::uint64_t seed = opts.seed.value_or(1);

  std::vector<phe::CheckReport> reports;
  if (opts.suite == "concentration") {
    reports = phe::run_suite(phe::concentration_suite_from_json(params), seed);
  } else if (opts.suite == "anticoncentration") {
    reports = phe::run_suite(phe::anticoncentration_suite_from_json(params), seed);
  } else if (opts.suite == "width-sum") {
    reports = phe::run_suite(phe::width_sum_suite_from_json(params), seed);
  } else if (opts.suite == "variance") {
    reports = phe::run_suite(phe::variance_suite_from_json(params), seed);
  } else {
    throw phe::ConfigError(fmt::format("unknown suite '{}'", opts.suite));
  }

  std::string lines;
  bool all_pass = true;
  for (const auto& r : reports) {
    lines += r.to_json().dump() + "\n";
    all_pass = all_pass && r.pass;
  }
  write_file(fs::path(opts.out) / fmt::format("verify_{}.jsonl", opts.suite), lines);
  std::size_t passed = 0;
  for (const auto& r : reports) passed += r.pass ? 1 : 0;
  std::cerr << fmt::format("{}: {}/{} checks passed\n", opts.suite, passed, reports.size());
  return all_pass ? 0 : kExitFailure;
}

int cmd_plot(const Options& opts) {
  if (opts.inputs.empty()) throw phe::ConfigError("plot needs at least one aggregate CSV");
  for (const auto& input : opts.inputs) {
    std::ifstream in(input);
    if (!in) throw phe::ConfigError(fmt::format("cannot open '{}'", input));
    std::vector<std::size_t> rounds;
    const auto curves = phe::read_aggregate_csv(in, &rounds);
    const std::string stem = fs::path(input).stem().string();
    write_file(fs::path(opts.out) / (stem + ".svg"), phe::render_regret_svg(curves, rounds, stem));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed-history exploration bandit simulator"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  };

  auto* gen = app.add_subcommand("gen", "Write generated problem instances as JSON");
  gen->add_option("--config", opts.config, "Experiment config JSON")->required();
  add_common(gen);

  auto* run = app.add_subcommand("run", "Run an experiment and write regret CSVs");
  run->add_option("--config", opts.config, "Experiment config JSON")->required();
  run->add_option("--jobs", opts.jobs, "Concurrent episodes (falls back to PHE_JOBS)");
  run->add_option("--stride", opts.stride, "Log every stride-th round");
  add_common(run);

  auto* verify = app.add_subcommand("verify", "Run a Monte-Carlo verification suite");
  verify->add_option("suite", opts.suite, "concentration | anticoncentration | width-sum | variance")
      ->required();
  verify->add_option("--config", opts.config, "Suite parameter JSON");
  add_common(verify);

  auto* plot = app.add_subcommand("plot", "Render aggregate CSVs as SVG regret curves");
  plot->add_option("inputs", opts.inputs, "Aggregate CSV files")->required();
  plot->add_option("--out", opts.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(opts);
    if (run->parsed()) return cmd_run(opts);
    if (verify->parsed()) return cmd_verify(opts);
    if (plot->parsed()) return cmd_plot(opts);
  } catch (const phe::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const phe::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
