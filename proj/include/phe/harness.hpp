#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phe/environment.hpp"
#include "phe/policy.hpp"

namespace phe {

struct ExperimentConfig {
  BanditKind kind = BanditKind::kLinear;
  Eigen::Index d = 5;
  std::size_t num_arms = 100;
  std::size_t horizon = 10000;
  std::size_t num_instances = 100;
  std::uint64_t master_seed = 0;
  std::vector<PolicySpec> policies;
  std::size_t stride = 10;
  std::size_t jobs = 1;

  // Throws InvalidParameter unless horizon >= d, K >= d, d >= 2,
  // num_instances >= 1, stride >= 1 and at least one policy is given.
  void validate() const;
};

struct RunRecord {
  std::size_t instance_id = 0;
  std::string policy_id;
  std::vector<std::size_t> arms;
  // cum_regret[t - 1] = sum of gaps of the arms pulled in rounds 1..t.
  std::vector<double> cum_regret;
  // min(||x_{I_t}||^2_{G_t^-1}, 1) for rounds t > d, with
  // G_t = lambda I + sum_{l < t} X_l X_l^T. Filled when requested.
  std::vector<double> width_trace;
  double width_lambda = 0.0;
  bool failed = false;
  std::string error;
};

struct RegretCurve {
  std::string policy_id;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::size_t num_instances = 0;
};

struct EpisodeOptions {
  std::uint64_t master_seed = 0;
  std::size_t instance_id = 0;
  std::uint64_t policy_stream = 0;
  std::string policy_id;
  // When set, records the width trace with this regularizer.
  std::optional<double> width_lambda;
};

// Plays `horizon` rounds. Rewards for (instance, round, arm) come from their
// own stream, so every policy on an instance sees the same reward draws.
// Policy errors end the episode early and are reported in the record.
RunRecord run_episode(const BanditInstance& inst, Policy& policy,
                      std::size_t horizon, const EpisodeOptions& opts);

// Pointwise mean and standard error (sample std / sqrt(count)).
// Throws InvalidParameter on an empty input or mismatched horizons.
RegretCurve aggregate(const std::vector<RunRecord>& records);

struct ExperimentResult {
  std::vector<BanditInstance> instances;
  // Indexed [instance * num_policies + policy].
  std::vector<RunRecord> records;
  std::vector<RegretCurve> curves;

  bool any_failed() const;
};

// Instance i is generated from Lineage{seed, i, kInstanceStream, 0}; policy p
// on instance i draws from Lineage{seed, i, p, t} in round t.
BanditInstance experiment_instance(const ExperimentConfig& cfg,
                                   std::size_t instance_id);
PolicyContext experiment_context(const ExperimentConfig& cfg,
                                 const BanditInstance& inst);

// Runs every policy on every instance, `cfg.jobs` episodes at a time.
// Curves are computed from successful runs only.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// policy,instance,round,cum_regret for rounds that are multiples of stride.
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records,
                    std::size_t stride);
// policy,round,mean_regret,stderr for rounds that are multiples of stride.
void write_aggregate_csv(std::ostream& out,
                         const std::vector<RegretCurve>& curves,
                         std::size_t stride);

// Runs `count` independent jobs on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace phe
