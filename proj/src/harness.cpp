#include "phe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "phe/error.hpp"

namespace phe {

void ExperimentConfig::validate() const {
  if (d < 2) throw InvalidParameter("d must be at least 2");
  if (num_arms < static_cast<std::size_t>(d)) throw InvalidParameter("K must be at least d");
  if (horizon < static_cast<std::size_t>(d)) throw InvalidParameter("n must be at least d");
  if (num_instances < 1) throw InvalidParameter("at least one instance is required");
  if (stride < 1) throw InvalidParameter("stride must be at least 1");
  if (policies.empty()) throw InvalidParameter("at least one policy is required");
  std::vector<std::string> labels;
  for (const auto& p : policies) labels.push_back(p.label());
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw InvalidParameter("policy ids must be distinct; set 'id' to disambiguate");
}

RunRecord run_episode(const BanditInstance& inst, Policy& policy, std::size_t horizon,
                      const EpisodeOptions& opts) {
  RunRecord rec;
  rec.instance_id = opts.instance_id;
  rec.policy_id = opts.policy_id;
  rec.arms.reserve(horizon);
  rec.cum_regret.reserve(horizon);

  const auto d = static_cast<std::size_t>(inst.dim());
  std::optional<PosDefState> widths;
  if (opts.width_lambda) {
    widths.emplace(inst.dim(), *opts.width_lambda, 1.0);
    rec.width_lambda = *opts.width_lambda;
  }

  double regret = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    try {
      RngStream policy_rng(Lineage{opts.master_seed, opts.instance_id, opts.policy_stream, t});
      const std::size_t arm = policy.select(t, policy_rng);
      if (arm >= inst.num_arms()) throw IndexError("policy selected an out-of-range arm");

      RngStream reward_rng(Lineage{opts.master_seed, opts.instance_id, reward_stream(arm), t});
      const int reward = draw_reward(inst, arm, reward_rng);
      policy.update(arm, reward);

      regret += inst.gaps()[arm];
      rec.arms.push_back(arm);
      rec.cum_regret.push_back(regret);

      if (widths) {
        const Vec x = inst.feature(arm);
        if (t > d) rec.width_trace.push_back(std::min(widths->quad_form(x), 1.0));
        widths->rank_one_update(x);
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = fmt::format("instance {} policy {} round {}: {}", opts.instance_id,
                              opts.policy_id, t, e.what());
      break;
    }
  }
  return rec;
}

RegretCurve aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvalidParameter("nothing to aggregate");
  const std::size_t n = records.front().cum_regret.size();
  for (const auto& r : records) {
    if (r.cum_regret.size() != n) throw InvalidParameter("records have different horizons");
  }

  RegretCurve curve;
  curve.policy_id = records.front().policy_id;
  curve.num_instances = records.size();
  curve.mean.assign(n, 0.0);
  curve.stderr_.assign(n, 0.0);
  const double count = static_cast<double>(records.size());
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.cum_regret[t];
    const double mean = sum / count;
    curve.mean[t] = mean;
    if (records.size() > 1) {
      double ss = 0.0;
      for (const auto& r : records) ss += (r.cum_regret[t] - mean) * (r.cum_regret[t] - mean);
      curve.stderr_[t] = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
  }
  return curve;
}

bool ExperimentResult::any_failed() const {
  return std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return r.failed; });
}

BanditInstance experiment_instance(const ExperimentConfig& cfg, std::size_t instance_id) {
  RngStream rng(Lineage{cfg.master_seed, instance_id, kInstanceStream, 0});
  return gen_instance(cfg.kind, cfg.d, cfg.num_arms, rng);
}

PolicyContext experiment_context(const ExperimentConfig& cfg, const BanditInstance& inst) {
  return PolicyContext{inst.features(), cfg.horizon, cfg.kind, inst.theta().norm()};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.instances.reserve(cfg.num_instances);
  for (std::size_t i = 0; i < cfg.num_instances; ++i)
    result.instances.push_back(experiment_instance(cfg, i));

  // Surface configuration problems before any episode starts.
  for (const auto& spec : cfg.policies) make_policy(spec, experiment_context(cfg, result.instances[0]));

  const std::size_t num_policies = cfg.policies.size();
  result.records.resize(cfg.num_instances * num_policies);
  parallel_for(result.records.size(), cfg.jobs, [&](std::size_t job) {
    const std::size_t instance_id = job / num_policies;
    const std::size_t policy_index = job % num_policies;
    const auto& inst = result.instances[instance_id];
    const auto& spec = cfg.policies[policy_index];
    auto policy = make_policy(spec, experiment_context(cfg, inst));
    EpisodeOptions opts;
    opts.master_seed = cfg.master_seed;
    opts.instance_id = instance_id;
    opts.policy_stream = policy_index;
    opts.policy_id = spec.label();
    result.records[job] = run_episode(inst, *policy, cfg.horizon, opts);
  });

  for (std::size_t p = 0; p < num_policies; ++p) {
    std::vector<RunRecord> ok;
    for (std::size_t i = 0; i < cfg.num_instances; ++i) {
      const auto& rec = result.records[i * num_policies + p];
      if (!rec.failed) ok.push_back(rec);
    }
    if (ok.empty()) {
      result.curves.push_back(RegretCurve{cfg.policies[p].label(), {}, {}, 0});
    } else {
      result.curves.push_back(aggregate(ok));
    }
  }
  return result;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records,
                    std::size_t stride) {
  if (stride < 1) throw InvalidParameter("stride must be at least 1");
  out << "policy,instance,round,cum_regret\n";
  for (const auto& r : records) {
    for (std::size_t t = stride; t <= r.cum_regret.size(); t += stride) {
      out << fmt::format("{},{},{},{:.10g}\n", r.policy_id, r.instance_id, t,
                         r.cum_regret[t - 1]);
    }
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<RegretCurve>& curves,
                         std::size_t stride) {
  if (stride < 1) throw InvalidParameter("stride must be at least 1");
  out << "policy,round,mean_regret,stderr\n";
  for (const auto& c : curves) {
    for (std::size_t t = stride; t <= c.mean.size(); t += stride) {
      out << fmt::format("{},{},{:.10g},{:.10g}\n", c.policy_id, t, c.mean[t - 1],
                         c.stderr_[t - 1]);
    }
  }
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace phe
