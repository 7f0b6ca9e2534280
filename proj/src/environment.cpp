#include "phe/environment.hpp"

#include <algorithm>
#include <cmath>

#include "phe/error.hpp"

namespace phe {
namespace {

constexpr double kMeanSlack = 1e-12;

std::vector<double> compute_means(BanditKind kind, const Mat& features,
                                  const Vec& theta) {
  const Vec scores = features * theta;
  std::vector<double> means(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    means[static_cast<std::size_t>(i)] =
        kind == BanditKind::kLinear ? scores[i] : sigmoid(scores[i]);
  }
  return means;
}

bool unique_maximum(const std::vector<double>& means) {
  const double best = *std::max_element(means.begin(), means.end());
  return std::count(means.begin(), means.end(), best) == 1;
}

Mat sample_features(Eigen::Index d, std::size_t num_arms, RngStream& rng) {
  Mat features(static_cast<Eigen::Index>(num_arms), d);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    features.row(i).head(d - 1) = sample_ball(d - 1, 1.0, rng).transpose();
    features(i, d - 1) = 1.0;
  }
  return features;
}

void check_shape(Eigen::Index d, std::size_t num_arms) {
  if (d < 2) throw InvalidParameter("dimension must be at least 2");
  if (num_arms < static_cast<std::size_t>(d))
    throw InvalidParameter("number of arms must be at least the dimension");
}

}  // namespace

std::string to_string(BanditKind kind) {
  return kind == BanditKind::kLinear ? "linear" : "logistic";
}

BanditKind parse_bandit_kind(const std::string& name) {
  if (name == "linear") return BanditKind::kLinear;
  if (name == "logistic") return BanditKind::kLogistic;
  throw InvalidParameter("unknown bandit kind '" + name + "'");
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

BanditInstance::BanditInstance(BanditKind kind, Mat features, Vec theta,
                               std::uint64_t seed)
    : kind_(kind), features_(std::move(features)), theta_(std::move(theta)), seed_(seed) {
  if (features_.rows() < 1) throw InvalidParameter("instance needs at least one arm");
  if (features_.cols() != theta_.size())
    throw InvalidParameter("feature and parameter dimensions differ");
  if (!features_.allFinite() || !theta_.allFinite())
    throw InvalidParameter("instance contains non-finite values");

  means_ = compute_means(kind_, features_, theta_);
  for (double& mu : means_) {
    if (mu < -kMeanSlack || mu > 1.0 + kMeanSlack)
      throw InvalidParameter("linear instance has a mean outside [0, 1]");
    mu = std::clamp(mu, 0.0, 1.0);
  }

  const auto best = std::max_element(means_.begin(), means_.end());
  optimal_arm_ = static_cast<std::size_t>(best - means_.begin());
  gaps_.resize(means_.size());
  for (std::size_t i = 0; i < means_.size(); ++i) gaps_[i] = *best - means_[i];
}

bool BanditInstance::has_unique_optimum() const { return unique_maximum(means_); }

double BanditInstance::max_feature_norm() const {
  return features_.rowwise().norm().maxCoeff();
}

nlohmann::json BanditInstance::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    rows.push_back(std::vector<double>(features_.row(i).begin(), features_.row(i).end()));
  }
  return {
      {"kind", to_string(kind_)},
      {"d", features_.cols()},
      {"K", features_.rows()},
      {"features", std::move(rows)},
      {"theta", std::vector<double>(theta_.begin(), theta_.end())},
      {"seed", seed_},
  };
}

BanditInstance BanditInstance::from_json(const nlohmann::json& doc) {
  try {
    const auto kind = parse_bandit_kind(doc.at("kind").get<std::string>());
    const auto d = doc.at("d").get<Eigen::Index>();
    const auto k = doc.at("K").get<Eigen::Index>();
    const auto& rows = doc.at("features");
    const auto theta_vals = doc.at("theta").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(rows.size()) != k ||
        static_cast<Eigen::Index>(theta_vals.size()) != d)
      throw InvalidParameter("instance document has inconsistent sizes");
    Mat features(k, d);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != d)
        throw InvalidParameter("feature row has wrong length");
      for (Eigen::Index j = 0; j < d; ++j) features(i, j) = row[static_cast<std::size_t>(j)];
    }
    const Vec theta = Eigen::Map<const Vec>(theta_vals.data(), d);
    return BanditInstance(kind, std::move(features), theta,
                          doc.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed instance document: ") + e.what());
  }
}

Vec sample_ball(Eigen::Index dim, double radius, RngStream& rng) {
  Vec v(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (norm == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return v * (r / norm);
}

BanditInstance gen_linear_instance(Eigen::Index d, std::size_t num_arms, RngStream& rng) {
  check_shape(d, num_arms);
  for (;;) {
    Mat features = sample_features(d, num_arms, rng);
    Vec theta(d);
    theta.head(d - 1) = sample_ball(d - 1, 0.5, rng);
    theta[d - 1] = 0.5;
    if (!unique_maximum(compute_means(BanditKind::kLinear, features, theta))) continue;
    return BanditInstance(BanditKind::kLinear, std::move(features), std::move(theta),
                          lineage_seed(rng.lineage()));
  }
}

BanditInstance gen_logistic_instance(Eigen::Index d, std::size_t num_arms, RngStream& rng) {
  check_shape(d, num_arms);
  for (;;) {
    Mat features = sample_features(d, num_arms, rng);
    Vec theta = sample_ball(d, 3.0, rng);
    if (!unique_maximum(compute_means(BanditKind::kLogistic, features, theta))) continue;
    return BanditInstance(BanditKind::kLogistic, std::move(features), std::move(theta),
                          lineage_seed(rng.lineage()));
  }
}

BanditInstance gen_instance(BanditKind kind, Eigen::Index d, std::size_t num_arms,
                            RngStream& rng) {
  return kind == BanditKind::kLinear ? gen_linear_instance(d, num_arms, rng)
                                     : gen_logistic_instance(d, num_arms, rng);
}

int draw_reward(const BanditInstance& inst, std::size_t arm, RngStream& rng) {
  if (arm >= inst.num_arms()) throw IndexError("arm index out of range");
  return rng.uniform() < inst.means()[arm] ? 1 : 0;
}

double rescale_reward(double y, double lo, double hi) {
  if (!(hi > lo)) throw InvalidParameter("reward range must satisfy hi > lo");
  return (y - lo) / (hi - lo);
}

}  // namespace phe
