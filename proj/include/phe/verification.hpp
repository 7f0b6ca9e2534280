#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phe/harness.hpp"
#include "phe/linalg.hpp"
#include "phe/rng.hpp"

namespace phe {

// A fixed sequence of pulled features and rewards. Quantities here use the
// unscaled Gram matrix G = lambda I + sum X_l X_l^T, for which
//   theta_tilde = G^-1 sum X_l [Y_l + sum_j Z_jl],
//   theta_bar   = G^-1 sum X_l [Y_l + a / 2].
struct FrozenHistory {
  Mat features;               // one pulled feature vector per row
  std::vector<double> rewards;
  std::vector<double> means;  // per-pull reward means, optional
  double lambda = 1.0;
  std::uint64_t a = 1;

  Eigen::Index dim() const { return features.cols(); }
  std::size_t length() const { return rewards.size(); }

  // Throws InvalidParameter unless the history has at least d pulls,
  // its first d pulls span R^d, lambda > 0 and the shapes agree.
  void validate() const;

  PosDefState gram() const;
  // lambda_min(lambda I + sum of the first d outer products).
  double initial_min_eigenvalue() const;
};

Vec compute_theta_bar(const FrozenHistory& h);
// Same quantity from explicit per-pull pseudo-reward sums.
Vec compute_theta_tilde(const FrozenHistory& h,
                        const std::vector<double>& pseudo_sums);

// Samples D = x^T theta_tilde - x^T theta_bar by redrawing pseudo-rewards.
// Pulls with identical features share one binomial draw.
class PseudoDeviationSampler {
 public:
  PseudoDeviationSampler(const FrozenHistory& h, const Vec& x);

  double sample(RngStream& rng) const;
  // ||x||_{G^-1}
  double width() const { return width_; }
  // Exact variance a/4 sum_l (x^T G^-1 X_l)^2.
  double variance() const;

  struct Group {
    double weight;           // x^T G^-1 X_l
    std::uint64_t trials;    // a times the multiplicity
  };
  const std::vector<Group>& groups() const { return groups_; }

 private:
  std::vector<Group> groups_;
  double width_ = 0.0;
  double a_ = 0.0;
};

struct CheckReport {
  std::string quantity;
  double empirical = 0.0;
  double bound = 0.0;
  std::size_t num_samples = 0;
  double mc_stderr = 0.0;
  bool pass = false;
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json to_json() const;
};

// Binomial-proportion standard error sqrt(p (1 - p) / n).
double proportion_stderr(double p, std::size_t n);

// freq(|D| >= c ||x||) against 2 exp(-2 c^2 / a).
CheckReport check_concentration(const FrozenHistory& h, const Vec& x,
                                double c, std::size_t samples,
                                RngStream& rng);

// Lower bound (1 - lambda / lambda_min(G_{d+1}) - 4 c^2 / a - 8 a / n^3)
// / (16 log n) on P(D > c ||x||).
double anticoncentration_bound(const FrozenHistory& h, double c,
                               std::size_t n_ref);

// freq(D > c ||x||) against anticoncentration_bound. Throws
// InvalidParameter unless 2 a log(n_ref) > c^2 > 0.
CheckReport check_anticoncentration(const FrozenHistory& h, const Vec& x,
                                    double c, std::size_t n_ref,
                                    std::size_t samples, RngStream& rng);

// freq(D > eps) against freq(|D| > eps) / 2; passes when they agree within
// three standard errors of the paired difference.
CheckReport check_symmetry(const FrozenHistory& h, const Vec& x, double eps,
                           std::size_t samples, RngStream& rng);

// 2 d log(1 + n L^2 / (d lambda))
double width_sum_bound(Eigen::Index d, std::size_t horizon,
                       double max_feature_norm, double lambda);

// Sum of the record's width trace against width_sum_bound; deterministic.
CheckReport check_width_sum(const RunRecord& run, Eigen::Index d,
                            double max_feature_norm);

// Variance of x^T(theta_tilde - theta_bar) under pseudo-reward resampling
// against the variance of x^T G^-1 sum X_l (Y_l - mu_l) under reward
// resampling. Requires per-pull means and a >= 1.
CheckReport check_variance_dominance(const FrozenHistory& h, const Vec& x,
                                     std::size_t samples, RngStream& rng);

// Regularizer satisfying lambda = lambda_min(G_{d+1}) / 4 for the first d
// pulls of `features`, i.e. lambda_min(sum of first d outer products) / 3.
double self_consistent_lambda(const Mat& features, Eigen::Index d);

// History of `rounds` pulls on a fresh linear instance: the first d pulls
// follow the initialization order, the rest are uniformly random arms.
FrozenHistory make_fixture_history(Eigen::Index d, std::size_t num_arms,
                                   std::size_t rounds, double lambda,
                                   std::uint64_t a, RngStream& rng);

// Unit-norm random direction.
Vec random_direction(Eigen::Index d, RngStream& rng);

struct ConcentrationSuite {
  Eigen::Index d = 3;
  std::size_t num_arms = 10;
  std::size_t rounds = 50;
  double lambda = 1.0;
  std::vector<std::uint64_t> a_values{1, 2};
  std::vector<double> c_values{0.5, 1.0, 2.0};
  std::size_t directions = 5;
  std::size_t samples = 1'000'000;
};

struct AnticoncentrationSuite {
  Eigen::Index d = 3;
  std::size_t num_arms = 10;
  std::size_t rounds = 50;
  double c = 1.0;  // a = ceil(16 c^2), lambda self-consistent
  std::size_t n_ref = 10000;
  std::size_t directions = 5;
  std::size_t samples = 100'000;
};

struct WidthSumSuite {
  std::size_t runs = 10;
  Eigen::Index d = 5;
  std::size_t num_arms = 100;
  std::size_t horizon = 2000;
  double a = 1.0;
  double lambda = 1.0;
};

struct VarianceSuite {
  Eigen::Index d = 3;
  std::size_t num_arms = 10;
  std::size_t rounds = 50;
  std::vector<std::uint64_t> a_values{1, 2};
  std::size_t directions = 5;
  std::size_t samples = 100'000;
};

// Each suite throws ConfigError on unknown keys or bad types.
ConcentrationSuite concentration_suite_from_json(const nlohmann::json& doc);
AnticoncentrationSuite anticoncentration_suite_from_json(const nlohmann::json& doc);
WidthSumSuite width_sum_suite_from_json(const nlohmann::json& doc);
VarianceSuite variance_suite_from_json(const nlohmann::json& doc);

std::vector<CheckReport> run_suite(const ConcentrationSuite& s, std::uint64_t seed);
std::vector<CheckReport> run_suite(const AnticoncentrationSuite& s, std::uint64_t seed);
std::vector<CheckReport> run_suite(const WidthSumSuite& s, std::uint64_t seed);
std::vector<CheckReport> run_suite(const VarianceSuite& s, std::uint64_t seed);

}  // namespace phe
