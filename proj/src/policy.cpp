#include "phe/policy.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "phe/error.hpp"

namespace phe {
namespace {

std::size_t num_rows(const Mat& m) { return static_cast<std::size_t>(m.rows()); }

Vec row_of(const Mat& m, std::size_t i) {
  return m.row(static_cast<Eigen::Index>(i)).transpose();
}

// Initialization round: arms K, K - 1, ..., K - d + 1 in 1-based terms.
bool in_initialization(const Mat& features, std::size_t t) {
  return t <= static_cast<std::size_t>(features.cols());
}

void check_round(std::size_t t) {
  if (t < 1) throw InvalidParameter("rounds are numbered from 1");
}

void check_features(const Mat& features) {
  if (features.rows() < features.cols() || features.cols() < 1)
    throw InvalidParameter("policies need at least d arms");
}

// Per-arm grouped logistic rows (x_i, positives, trials) for pulled arms.
WeightedLogit observed_problem(const Mat& features, const ArmStats& stats,
                               double lambda) {
  WeightedLogit prob;
  prob.lambda = lambda;
  prob.dim = features.cols();
  for (std::size_t i = 0; i < stats.num_arms(); ++i) {
    if (stats.pulls[i] == 0) continue;
    prob.rows.push_back({row_of(features, i), stats.cum_reward[i],
                         static_cast<double>(stats.pulls[i])});
  }
  return prob;
}

SolverResult fit_or_throw(const WeightedLogit& prob, const SolverOptions& opts,
                          const Vec& warm, const char* who) {
  SolverResult res = fit(prob, opts, warm);
  if (!res.converged) {
    throw SolverError(fmt::format("{}: logistic fit did not converge after {} iterations "
                                  "(gradient norm {:.3e})",
                                  who, res.iterations, res.grad_norm));
  }
  return res;
}

}  // namespace

std::uint64_t ArmStats::rounds() const {
  return std::accumulate(pulls.begin(), pulls.end(), std::uint64_t{0});
}

void ArmStats::record(std::size_t arm, double reward) {
  if (arm >= pulls.size()) throw IndexError("arm index out of range");
  if (!(reward >= 0.0 && reward <= 1.0))
    throw InvalidReward("rewards must lie in [0, 1]; rescale them first");
  ++pulls[arm];
  cum_reward[arm] += reward;
}

std::size_t initialization_arm(std::size_t num_arms, std::size_t t) {
  if (t < 1 || t > num_arms) throw InvalidParameter("initialization round out of range");
  return num_arms - t;
}

std::size_t argmax_random_tie(const Vec& scores, RngStream& rng) {
  const double best = scores.maxCoeff();
  std::vector<std::size_t> winners;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] == best) winners.push_back(static_cast<std::size_t>(i));
  }
  if (winners.size() == 1) return winners.front();
  return winners[rng.index(winners.size())];
}

double confidence_radius(Eigen::Index d, std::size_t horizon, double max_feature_norm,
                         double lambda, double theta_norm_bound) {
  const double dd = static_cast<double>(d);
  const double n = static_cast<double>(horizon);
  const double l2 = max_feature_norm * max_feature_norm;
  return 0.5 * std::sqrt(dd * std::log(n + n * n * l2 / (dd * lambda))) +
         std::sqrt(lambda) * theta_norm_bound;
}

// ---------------------------------------------------------------- LinPhe

LinPhe::LinPhe(Mat features, const Options& opts)
    : features_(std::move(features)),
      cfg_(opts.a),
      gram_(features_.cols(), opts.lambda, opts.scaled_gram ? opts.a + 1.0 : 1.0),
      stats_(num_rows(features_)),
      theta_tilde_(Vec::Zero(features_.cols())) {
  check_features(features_);
}

Vec LinPhe::estimate(const std::vector<double>& pseudo) const {
  if (pseudo.size() != stats_.num_arms())
    throw InvalidParameter("one pseudo-reward sum per arm expected");
  Vec b = Vec::Zero(features_.cols());
  for (std::size_t i = 0; i < stats_.num_arms(); ++i) {
    if (stats_.pulls[i] == 0) continue;
    b += features_.row(static_cast<Eigen::Index>(i)).transpose() *
         (stats_.cum_reward[i] + pseudo[i]);
  }
  return gram_.solve(b);
}

Vec LinPhe::theta_bar() const {
  std::vector<double> pseudo(stats_.num_arms());
  for (std::size_t i = 0; i < pseudo.size(); ++i)
    pseudo[i] = 0.5 * static_cast<double>(cfg_.pseudo_count(stats_.pulls[i]));
  return estimate(pseudo);
}

std::size_t LinPhe::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);

  std::vector<double> pseudo(stats_.num_arms(), 0.0);
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    if (stats_.pulls[i] > 0)
      pseudo[i] = static_cast<double>(pseudo_reward_count(cfg_, stats_.pulls[i], rng));
  }
  theta_tilde_ = estimate(pseudo);
  return argmax_random_tie(features_ * theta_tilde_, rng);
}

void LinPhe::update(std::size_t arm, double reward) {
  stats_.record(arm, reward);
  gram_.rank_one_update(row_of(features_, arm));
}

// ---------------------------------------------------------------- LogPhe

LogPhe::LogPhe(Mat features, const Options& opts)
    : features_(std::move(features)),
      cfg_(opts.a),
      lambda_(opts.lambda),
      solver_(opts.solver),
      stats_(num_rows(features_)),
      theta_tilde_(Vec::Zero(features_.cols())) {
  check_features(features_);
  if (!(lambda_ >= 0.0)) throw InvalidParameter("regularizer must be non-negative");
}

WeightedLogit LogPhe::problem(const std::vector<double>& pseudo) const {
  if (pseudo.size() != stats_.num_arms())
    throw InvalidParameter("one pseudo-reward sum per arm expected");
  WeightedLogit prob;
  prob.lambda = lambda_;
  prob.dim = features_.cols();
  for (std::size_t i = 0; i < stats_.num_arms(); ++i) {
    const std::uint64_t pulls = stats_.pulls[i];
    if (pulls == 0) continue;
    const double trials = static_cast<double>(pulls + cfg_.pseudo_count(pulls));
    prob.rows.push_back({row_of(features_, i), stats_.cum_reward[i] + pseudo[i], trials});
  }
  return prob;
}

std::size_t LogPhe::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);

  std::vector<double> pseudo(stats_.num_arms(), 0.0);
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    if (stats_.pulls[i] > 0)
      pseudo[i] = static_cast<double>(pseudo_reward_count(cfg_, stats_.pulls[i], rng));
  }
  theta_tilde_ = fit_or_throw(problem(pseudo), solver_, theta_tilde_, "logphe").theta;
  return argmax_random_tie(features_ * theta_tilde_, rng);
}

void LogPhe::update(std::size_t arm, double reward) { stats_.record(arm, reward); }

// ---------------------------------------------------------------- LinUcb

LinUcb::LinUcb(Mat features, const Options& opts)
    : features_(std::move(features)),
      gram_(features_.cols(), opts.lambda, 1.0),
      target_(Vec::Zero(features_.cols())),
      stats_(num_rows(features_)) {
  check_features(features_);
  const double max_norm = features_.rowwise().norm().maxCoeff();
  radius_ = confidence_radius(features_.cols(), std::max<std::size_t>(opts.horizon, 1),
                              max_norm, opts.lambda, opts.theta_norm_bound);
}

Vec LinUcb::ridge_estimate() const { return gram_.solve(target_); }

Vec LinUcb::scores() const {
  const Vec mean = features_ * ridge_estimate();
  Vec out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out[i] = mean[i] + radius_ * gram_.quad_norm(features_.row(i).transpose());
  }
  return out;
}

std::size_t LinUcb::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);
  return argmax_random_tie(scores(), rng);
}

void LinUcb::update(std::size_t arm, double reward) {
  stats_.record(arm, reward);
  const Vec x = row_of(features_, arm);
  gram_.rank_one_update(x);
  target_ += x * reward;
}

// ---------------------------------------------------------------- LinTs

LinTs::LinTs(Mat features, const Options& opts)
    : features_(std::move(features)),
      gram_(features_.cols(), opts.lambda, 1.0),
      target_(Vec::Zero(features_.cols())),
      stats_(num_rows(features_)),
      v_(opts.v),
      sample_(Vec::Zero(features_.cols())) {
  check_features(features_);
  if (!(v_ >= 0.0)) throw InvalidParameter("posterior inflation must be non-negative");
}

Vec LinTs::ridge_estimate() const { return gram_.solve(target_); }

Vec LinTs::posterior_sample(RngStream& rng) {
  sample_ = ridge_estimate();
  if (v_ > 0.0) sample_ = sample_mvn(sample_, (v_ * v_) * gram_.inverse(), rng);
  return sample_;
}

std::size_t LinTs::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);
  return argmax_random_tie(features_ * posterior_sample(rng), rng);
}

void LinTs::update(std::size_t arm, double reward) {
  stats_.record(arm, reward);
  const Vec x = row_of(features_, arm);
  gram_.rank_one_update(x);
  target_ += x * reward;
}

// ---------------------------------------------------------------- EpsGreedy

double exploration_rate(std::size_t t) {
  if (t < 1) throw InvalidParameter("rounds are numbered from 1");
  return std::min(1.0, 0.05 / (2.0 * std::sqrt(static_cast<double>(t))));
}

EpsGreedy::EpsGreedy(Mat features, const Options& opts)
    : features_(std::move(features)),
      opts_(opts),
      gram_(features_.cols(), opts.lambda > 0.0 ? opts.lambda : 1.0, 1.0),
      target_(Vec::Zero(features_.cols())),
      stats_(num_rows(features_)),
      warm_(Vec::Zero(features_.cols())) {
  check_features(features_);
  if (!(opts.lambda > 0.0)) throw InvalidParameter("regularizer must be positive");
}

Vec EpsGreedy::fitted_model() {
  if (opts_.model == BanditKind::kLinear) return gram_.solve(target_);
  warm_ = fit_or_throw(observed_problem(features_, stats_, opts_.lambda), opts_.solver,
                       warm_, "egreedy")
              .theta;
  return warm_;
}

std::size_t EpsGreedy::exploit(const Vec& theta, RngStream& rng) const {
  return argmax_random_tie(features_ * theta, rng);
}

std::size_t EpsGreedy::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);
  if (rng.uniform() < exploration_rate(t)) return rng.index(stats_.num_arms());
  return exploit(fitted_model(), rng);
}

void EpsGreedy::update(std::size_t arm, double reward) {
  stats_.record(arm, reward);
  if (opts_.model == BanditKind::kLinear) {
    const Vec x = row_of(features_, arm);
    gram_.rank_one_update(x);
    target_ += x * reward;
  }
}

// ---------------------------------------------------------------- GlmUcb

GlmUcb::GlmUcb(Mat features, const Options& opts)
    : features_(std::move(features)),
      lambda_(opts.lambda),
      solver_(opts.solver),
      gram_(features_.cols(), opts.lambda, 1.0),
      stats_(num_rows(features_)),
      warm_(Vec::Zero(features_.cols())) {
  check_features(features_);
  const double max_norm = features_.rowwise().norm().maxCoeff();
  radius_ = confidence_radius(features_.cols(), std::max<std::size_t>(opts.horizon, 1),
                              max_norm, opts.lambda, opts.theta_norm_bound);
}

double GlmUcb::width(std::size_t arm) const {
  return radius_ / kKappa * gram_.quad_norm(row_of(features_, arm));
}

std::size_t GlmUcb::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);
  warm_ = fit_or_throw(observed_problem(features_, stats_, lambda_), solver_, warm_, "glmucb")
              .theta;
  const Vec s = features_ * warm_;
  Vec index(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    index[i] = sigmoid(s[i]) + width(static_cast<std::size_t>(i));
  return argmax_random_tie(index, rng);
}

void GlmUcb::update(std::size_t arm, double reward) {
  stats_.record(arm, reward);
  gram_.rank_one_update(row_of(features_, arm));
}

// ---------------------------------------------------------------- LogTs

LogTs::LogTs(Mat features, const Options& opts)
    : features_(std::move(features)),
      prior_precision_(opts.prior_precision),
      solver_(opts.solver),
      stats_(num_rows(features_)),
      warm_(Vec::Zero(features_.cols())),
      covariance_(Mat::Identity(features_.cols(), features_.cols())) {
  check_features(features_);
  if (!(prior_precision_ > 0.0)) throw InvalidParameter("prior precision must be positive");
}

WeightedLogit LogTs::problem() const {
  return observed_problem(features_, stats_, 0.5 * prior_precision_);
}

Vec LogTs::posterior_sample(RngStream& rng) {
  const WeightedLogit prob = problem();
  warm_ = fit_or_throw(prob, solver_, warm_, "logts").theta;
  covariance_ = spd_inverse(hessian(prob, warm_));
  return sample_mvn(warm_, covariance_, rng);
}

std::size_t LogTs::select(std::size_t t, RngStream& rng) {
  check_round(t);
  if (in_initialization(features_, t)) return initialization_arm(num_rows(features_), t);
  return argmax_random_tie(features_ * posterior_sample(rng), rng);
}

void LogTs::update(std::size_t arm, double reward) { stats_.record(arm, reward); }

// ---------------------------------------------------------------- specs

namespace {

const std::set<std::string> kPolicyNames{"linphe", "logphe", "linucb", "lints",
                                         "egreedy", "glmucb", "logts"};
const std::set<std::string> kSpecKeys{"name", "id", "a", "lambda", "v", "tol", "max_iter"};

template <typename T>
std::optional<T> optional_field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) return std::nullopt;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("policy field '{}' has the wrong type", key));
  }
}

}  // namespace

PolicySpec PolicySpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("policy entry must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!kSpecKeys.contains(key)) throw ConfigError(fmt::format("unknown policy key '{}'", key));
  }
  PolicySpec spec;
  const auto name = optional_field<std::string>(doc, "name");
  if (!name) throw ConfigError("policy entry needs a name");
  if (!kPolicyNames.contains(*name)) throw ConfigError(fmt::format("unknown policy '{}'", *name));
  if (doc.contains("a") && *name != "linphe" && *name != "logphe")
    throw ConfigError(fmt::format("policy '{}' takes no perturbation scale", *name));
  if (doc.contains("v") && *name != "lints")
    throw ConfigError(fmt::format("policy '{}' takes no posterior inflation", *name));
  spec.name = *name;
  spec.id = optional_field<std::string>(doc, "id").value_or("");
  spec.a = optional_field<double>(doc, "a");
  spec.lambda = optional_field<double>(doc, "lambda");
  spec.v = optional_field<double>(doc, "v");
  spec.tol = optional_field<double>(doc, "tol");
  spec.max_iter = optional_field<std::size_t>(doc, "max_iter");
  if (spec.a && !(*spec.a >= 0.0)) throw ConfigError("perturbation scale must be non-negative");
  if (spec.lambda && !(*spec.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (spec.v && !(*spec.v >= 0.0)) throw ConfigError("v must be non-negative");
  if (spec.tol && !(*spec.tol > 0.0)) throw ConfigError("tol must be positive");
  if (spec.id.find_first_of(",\n\"") != std::string::npos)
    throw ConfigError("policy id may not contain commas, quotes or newlines");
  return spec;
}

nlohmann::json PolicySpec::to_json() const {
  nlohmann::json doc{{"name", name}};
  if (!id.empty()) doc["id"] = id;
  if (a) doc["a"] = *a;
  if (lambda) doc["lambda"] = *lambda;
  if (v) doc["v"] = *v;
  if (tol) doc["tol"] = *tol;
  if (max_iter) doc["max_iter"] = *max_iter;
  return doc;
}

std::string PolicySpec::label() const {
  if (!id.empty()) return id;
  std::string out = name;
  if (name == "linphe" || name == "logphe") out += fmt::format("-a{:g}", a.value_or(1.0));
  if (name == "lints" && v) out += fmt::format("-v{:g}", *v);
  if (lambda) out += fmt::format("-l{:g}", *lambda);
  return out;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyContext& ctx) {
  SolverOptions solver;
  if (spec.tol) solver.tol = *spec.tol;
  if (spec.max_iter) solver.max_iter = *spec.max_iter;
  const double lambda = spec.lambda.value_or(1.0);

  try {
    if (spec.name == "linphe")
      return std::make_unique<LinPhe>(ctx.features, LinPhe::Options{spec.a.value_or(1.0), lambda});
    if (spec.name == "logphe")
      return std::make_unique<LogPhe>(ctx.features,
                                      LogPhe::Options{spec.a.value_or(1.0), lambda, solver});
    if (spec.name == "linucb")
      return std::make_unique<LinUcb>(ctx.features,
                                      LinUcb::Options{lambda, ctx.theta_norm_bound, ctx.horizon});
    if (spec.name == "lints")
      return std::make_unique<LinTs>(ctx.features, LinTs::Options{lambda, spec.v.value_or(1.0)});
    if (spec.name == "egreedy")
      return std::make_unique<EpsGreedy>(ctx.features, EpsGreedy::Options{ctx.kind, lambda, solver});
    if (spec.name == "glmucb")
      return std::make_unique<GlmUcb>(
          ctx.features, GlmUcb::Options{lambda, ctx.theta_norm_bound, ctx.horizon, solver});
    if (spec.name == "logts")
      return std::make_unique<LogTs>(ctx.features, LogTs::Options{lambda, solver});
  } catch (const InvalidParameter& e) {
    throw ConfigError(fmt::format("policy '{}': {}", spec.label(), e.what()));
  }
  throw ConfigError(fmt::format("unknown policy '{}'", spec.name));
}

}  // namespace phe
