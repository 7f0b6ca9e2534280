#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phe/environment.hpp"
#include "phe/glm.hpp"
#include "phe/linalg.hpp"
#include "phe/perturbation.hpp"
#include "phe/rng.hpp"

namespace phe {

// Per-arm pull counts and cumulative rewards.
struct ArmStats {
  std::vector<std::uint64_t> pulls;
  std::vector<double> cum_reward;

  explicit ArmStats(std::size_t num_arms = 0)
      : pulls(num_arms, 0), cum_reward(num_arms, 0.0) {}

  std::size_t num_arms() const { return pulls.size(); }
  std::uint64_t rounds() const;
  void record(std::size_t arm, double reward);
};

// Everything a policy may know about the problem: the arm features, the
// horizon, the reward model, and a bound on ||theta|| for the UCB widths.
struct PolicyContext {
  Mat features;
  std::size_t horizon = 0;
  BanditKind kind = BanditKind::kLinear;
  double theta_norm_bound = 1.0;
};

// Policy configuration record: {name, id?, a?, lambda?, v?, tol?, max_iter?}.
struct PolicySpec {
  std::string name;
  std::string id;
  std::optional<double> a;
  std::optional<double> lambda;
  std::optional<double> v;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;

  // Throws ConfigError on unknown keys, wrong types or an unknown name.
  static PolicySpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  // `id` when set, else a name derived from the policy and its parameters.
  std::string label() const;
};

class Policy {
 public:
  virtual ~Policy() = default;

  // Arm to pull in round t (1-based).
  virtual std::size_t select(std::size_t t, RngStream& rng) = 0;
  // Reward must lie in [0, 1]; throws InvalidReward otherwise.
  virtual void update(std::size_t arm, double reward) = 0;

  virtual const ArmStats& stats() const = 0;
};

// Arm played in initialization round t <= d: K - t + 1 (1-based), i.e.
// K - t as a 0-based index.
std::size_t initialization_arm(std::size_t num_arms, std::size_t t);

// Uniformly random index among the maximizers of `scores`.
std::size_t argmax_random_tie(const Vec& scores, RngStream& rng);

// Confidence radius 1/2 sqrt(d log(n + n^2 L^2 / (d lambda))) + sqrt(lambda) S.
double confidence_radius(Eigen::Index d, std::size_t horizon,
                         double max_feature_norm, double lambda,
                         double theta_norm_bound);

// Linear perturbed-history exploration.
class LinPhe final : public Policy {
 public:
  struct Options {
    double a = 1.0;
    double lambda = 1.0;
    // Keep the (a + 1) factor on the Gram matrix. Without it the estimate is
    // (a + 1) times larger and every arm's ranking is unchanged.
    bool scaled_gram = true;
  };

  LinPhe(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  // G^-1 sum_i x_i (V_i + pseudo_i) for explicit per-arm pseudo-reward sums.
  Vec estimate(const std::vector<double>& pseudo) const;
  // Estimate with every pseudo-reward replaced by its mean 1/2.
  Vec theta_bar() const;
  // Estimate computed by the most recent post-initialization select().
  const Vec& theta_tilde() const { return theta_tilde_; }
  const PosDefState& gram() const { return gram_; }
  const PerturbationConfig& perturbation() const { return cfg_; }
  const Mat& features() const { return features_; }

 private:
  Mat features_;
  PerturbationConfig cfg_;
  PosDefState gram_;
  ArmStats stats_;
  Vec theta_tilde_;
};

// Logistic perturbed-history exploration.
class LogPhe final : public Policy {
 public:
  struct Options {
    double a = 1.0;
    double lambda = 1.0;
    SolverOptions solver;
  };

  LogPhe(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  // Grouped logistic problem for explicit per-arm pseudo-reward sums.
  WeightedLogit problem(const std::vector<double>& pseudo) const;
  const Vec& theta_tilde() const { return theta_tilde_; }

 private:
  Mat features_;
  PerturbationConfig cfg_;
  double lambda_;
  SolverOptions solver_;
  ArmStats stats_;
  Vec theta_tilde_;
};

// Optimistic ridge regression.
class LinUcb final : public Policy {
 public:
  struct Options {
    double lambda = 1.0;
    double theta_norm_bound = 1.0;
    std::size_t horizon = 1;
  };

  LinUcb(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  Vec ridge_estimate() const;
  Vec scores() const;
  double radius() const { return radius_; }
  const PosDefState& gram() const { return gram_; }

 private:
  Mat features_;
  PosDefState gram_;
  Vec target_;
  ArmStats stats_;
  double radius_;
};

// Gaussian posterior sampling with prior N(0, I) and covariance v^2 G^-1.
class LinTs final : public Policy {
 public:
  struct Options {
    double lambda = 1.0;
    double v = 1.0;
  };

  LinTs(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  Vec ridge_estimate() const;
  // Draw from N(ridge estimate, v^2 G^-1); the ridge estimate itself if v = 0.
  Vec posterior_sample(RngStream& rng);
  // Posterior draw used by the last select().
  const Vec& last_sample() const { return sample_; }

 private:
  Mat features_;
  PosDefState gram_;
  Vec target_;
  ArmStats stats_;
  double v_;
  Vec sample_;
};

// Exploration rate min(1, 0.05 / (2 sqrt(t))).
double exploration_rate(std::size_t t);

// Epsilon-greedy over a ridge (linear) or regularized logistic fit.
class EpsGreedy final : public Policy {
 public:
  struct Options {
    BanditKind model = BanditKind::kLinear;
    double lambda = 1.0;
    SolverOptions solver;
  };

  EpsGreedy(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  // Greedy arm under a given parameter estimate.
  std::size_t exploit(const Vec& theta, RngStream& rng) const;
  Vec fitted_model();

 private:
  Mat features_;
  Options opts_;
  PosDefState gram_;
  Vec target_;
  ArmStats stats_;
  Vec warm_;
};

// Optimistic logistic policy with index s(x'theta) + beta / kappa ||x||_{G^-1}.
class GlmUcb final : public Policy {
 public:
  static constexpr double kKappa = 0.25;

  struct Options {
    double lambda = 1.0;
    double theta_norm_bound = 1.0;
    std::size_t horizon = 1;
    SolverOptions solver;
  };

  GlmUcb(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  // Exploration bonus of one arm under the current Gram matrix.
  double width(std::size_t arm) const;
  double radius() const { return radius_; }

 private:
  Mat features_;
  double lambda_;
  SolverOptions solver_;
  PosDefState gram_;
  ArmStats stats_;
  double radius_;
  Vec warm_;
};

// Laplace-approximate posterior sampling for logistic rewards, prior N(0, I).
class LogTs final : public Policy {
 public:
  struct Options {
    double prior_precision = 1.0;
    SolverOptions solver;
  };

  LogTs(Mat features, const Options& opts);

  std::size_t select(std::size_t t, RngStream& rng) override;
  void update(std::size_t arm, double reward) override;
  const ArmStats& stats() const override { return stats_; }

  // MAP problem with penalty (prior_precision / 2) ||theta||^2, the
  // log-density of N(0, I / prior_precision).
  WeightedLogit problem() const;
  // Draw from N(theta_map, H^-1) with H the Hessian at the MAP estimate.
  Vec posterior_sample(RngStream& rng);
  const Mat& last_covariance() const { return covariance_; }

 private:
  Mat features_;
  double prior_precision_;
  SolverOptions solver_;
  ArmStats stats_;
  Vec warm_;
  Mat covariance_;
};

// Builds a policy from its spec. Epsilon-greedy fits the context's reward
// model. Throws ConfigError for an unknown name or an out-of-range parameter.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                    const PolicyContext& ctx);

}  // namespace phe
