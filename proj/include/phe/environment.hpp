#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phe/linalg.hpp"
#include "phe/rng.hpp"

namespace phe {

enum class BanditKind { kLinear, kLogistic };

std::string to_string(BanditKind kind);
// Throws InvalidParameter for anything but "linear" or "logistic".
BanditKind parse_bandit_kind(const std::string& name);

double sigmoid(double s);

// A K-armed problem with Bernoulli rewards. Features are stored one arm
// per row.
class BanditInstance {
 public:
  // Computes means, gaps and the optimal arm (the first maximizer when the
  // best mean is tied). Throws InvalidParameter on a dimension mismatch or on
  // means outside [0, 1] for linear instances.
  BanditInstance(BanditKind kind, Mat features, Vec theta,
                 std::uint64_t seed = 0);

  BanditKind kind() const { return kind_; }
  Eigen::Index dim() const { return features_.cols(); }
  std::size_t num_arms() const { return static_cast<std::size_t>(features_.rows()); }
  const Mat& features() const { return features_; }
  Vec feature(std::size_t arm) const { return features_.row(static_cast<Eigen::Index>(arm)).transpose(); }
  const Vec& theta() const { return theta_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& gaps() const { return gaps_; }
  std::size_t optimal_arm() const { return optimal_arm_; }
  // Generated instances always have a unique optimal arm.
  bool has_unique_optimum() const;
  std::uint64_t seed() const { return seed_; }

  // max_i ||x_i||_2
  double max_feature_norm() const;

  nlohmann::json to_json() const;
  static BanditInstance from_json(const nlohmann::json& doc);

 private:
  BanditKind kind_;
  Mat features_;
  Vec theta_;
  std::vector<double> means_;
  std::vector<double> gaps_;
  std::size_t optimal_arm_ = 0;
  std::uint64_t seed_ = 0;
};

// Uniform draw from the dim-dimensional ball of the given radius.
Vec sample_ball(Eigen::Index dim, double radius, RngStream& rng);

// Features: first d-1 coordinates uniform in the unit ball, last one 1.
// Theta: first d-1 coordinates uniform in the radius-1/2 ball, last 1/2.
BanditInstance gen_linear_instance(Eigen::Index d, std::size_t num_arms,
                                   RngStream& rng);
// Features as above; theta uniform in the radius-3 d-dimensional ball.
BanditInstance gen_logistic_instance(Eigen::Index d, std::size_t num_arms,
                                     RngStream& rng);
BanditInstance gen_instance(BanditKind kind, Eigen::Index d,
                            std::size_t num_arms, RngStream& rng);

// Bernoulli(mu_arm) reward. Throws IndexError on an out-of-range arm.
int draw_reward(const BanditInstance& inst, std::size_t arm, RngStream& rng);

// Maps y in [lo, hi] onto [0, 1]. Throws InvalidParameter unless hi > lo.
double rescale_reward(double y, double lo, double hi);

}  // namespace phe
