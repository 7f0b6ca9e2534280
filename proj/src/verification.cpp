#include "phe/verification.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "phe/environment.hpp"
#include "phe/error.hpp"
#include "phe/perturbation.hpp"
#include "phe/policy.hpp"

namespace phe {
namespace {

constexpr double kSlackSigmas = 3.0;

std::vector<double> to_std(const Vec& v) { return {v.begin(), v.end()}; }

Mat first_rows_gram(const Mat& features, Eigen::Index d) {
  const Mat head = features.topRows(d);
  return head.transpose() * head;
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

// Mean and the standard error of the sample variance, sqrt((m4 - s^4) / n).
struct VarianceEstimate {
  double variance = 0.0;
  double stderr_ = 0.0;
};

VarianceEstimate estimate_variance(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double c = (x - mean) * (x - mean);
    m2 += c;
    m4 += c * c;
  }
  m2 /= n;
  m4 /= n;
  return {m2 * n / (n - 1.0), std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

nlohmann::json history_params(const FrozenHistory& h, const Vec& x) {
  return {{"a", h.a},
          {"lambda", h.lambda},
          {"d", h.dim()},
          {"history_length", h.length()},
          {"x", to_std(x)}};
}

void check_direction(const FrozenHistory& h, const Vec& x) {
  if (x.size() != h.dim()) throw InvalidParameter("direction has wrong dimension");
  if (x.isZero(0.0)) throw InvalidParameter("direction must be non-zero");
}

}  // namespace

void FrozenHistory::validate() const {
  const Eigen::Index d = dim();
  if (d < 1) throw InvalidParameter("history has no features");
  if (features.rows() != static_cast<Eigen::Index>(rewards.size()))
    throw InvalidParameter("one reward per pulled feature expected");
  if (!means.empty() && means.size() != rewards.size())
    throw InvalidParameter("one mean per pulled feature expected");
  if (features.rows() < d) throw InvalidParameter("history must contain at least d pulls");
  if (!(lambda > 0.0)) throw InvalidParameter("history regularizer must be positive");
  const Mat head = features.topRows(d);
  if (Eigen::FullPivLU<Mat>(head).rank() < d)
    throw InvalidParameter("first d pulls must span the feature space");
}

PosDefState FrozenHistory::gram() const {
  PosDefState g(dim(), lambda, 1.0);
  for (Eigen::Index l = 0; l < features.rows(); ++l) g.rank_one_update(features.row(l).transpose());
  g.refresh();
  return g;
}

double FrozenHistory::initial_min_eigenvalue() const {
  const Eigen::Index d = dim();
  return min_eigenvalue(first_rows_gram(features, d) + lambda * Mat::Identity(d, d));
}

Vec compute_theta_bar(const FrozenHistory& h) {
  std::vector<double> half(h.length(), 0.5 * static_cast<double>(h.a));
  return compute_theta_tilde(h, half);
}

Vec compute_theta_tilde(const FrozenHistory& h, const std::vector<double>& pseudo_sums) {
  h.validate();
  if (pseudo_sums.size() != h.length())
    throw InvalidParameter("one pseudo-reward sum per pull expected");
  Vec b = Vec::Zero(h.dim());
  for (std::size_t l = 0; l < h.length(); ++l) {
    b += h.features.row(static_cast<Eigen::Index>(l)).transpose() * (h.rewards[l] + pseudo_sums[l]);
  }
  return h.gram().solve(b);
}

PseudoDeviationSampler::PseudoDeviationSampler(const FrozenHistory& h, const Vec& x)
    : a_(static_cast<double>(h.a)) {
  h.validate();
  check_direction(h, x);
  const PosDefState g = h.gram();
  const Vec ginv_x = g.solve(x);
  width_ = g.quad_norm(x);

  std::map<std::vector<double>, std::size_t> seen;
  for (Eigen::Index l = 0; l < h.features.rows(); ++l) {
    const Vec row = h.features.row(l).transpose();
    auto [it, inserted] = seen.emplace(to_std(row), groups_.size());
    if (inserted) groups_.push_back({ginv_x.dot(row), 0});
    groups_[it->second].trials += h.a;
  }
}

double PseudoDeviationSampler::sample(RngStream& rng) const {
  double dev = 0.0;
  for (const auto& g : groups_) {
    const double u = static_cast<double>(sample_binomial(g.trials, rng));
    dev += g.weight * (u - 0.5 * static_cast<double>(g.trials));
  }
  return dev;
}

double PseudoDeviationSampler::variance() const {
  double var = 0.0;
  for (const auto& g : groups_) var += g.weight * g.weight * 0.25 * static_cast<double>(g.trials);
  return var;
}

nlohmann::json CheckReport::to_json() const {
  return {{"quantity", quantity}, {"empirical", empirical},   {"bound", bound},
          {"num_samples", num_samples}, {"mc_stderr", mc_stderr}, {"pass", pass},
          {"params", params}};
}

double proportion_stderr(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

CheckReport check_concentration(const FrozenHistory& h, const Vec& x, double c,
                                std::size_t samples, RngStream& rng) {
  if (!(c > 0.0)) throw InvalidParameter("c must be positive");
  if (samples == 0) throw InvalidParameter("at least one sample is required");
  const PseudoDeviationSampler sampler(h, x);
  const double threshold = c * sampler.width();
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    if (std::abs(sampler.sample(rng)) >= threshold) ++hits;
  }

  CheckReport r;
  r.quantity = "concentration";
  r.num_samples = samples;
  r.empirical = static_cast<double>(hits) / static_cast<double>(samples);
  r.bound = 2.0 * std::exp(-2.0 * c * c / static_cast<double>(h.a));
  r.mc_stderr = proportion_stderr(r.empirical, samples);
  r.pass = r.empirical <= r.bound + kSlackSigmas * r.mc_stderr;
  r.params = history_params(h, x);
  r.params["c"] = c;
  return r;
}

double anticoncentration_bound(const FrozenHistory& h, double c, std::size_t n_ref) {
  const double a = static_cast<double>(h.a);
  const double n = static_cast<double>(n_ref);
  const double ratio = h.lambda / h.initial_min_eigenvalue();
  return (1.0 - ratio - 4.0 * c * c / a - 8.0 * a / (n * n * n)) / (16.0 * std::log(n));
}

CheckReport check_anticoncentration(const FrozenHistory& h, const Vec& x, double c,
                                    std::size_t n_ref, std::size_t samples, RngStream& rng) {
  const double a = static_cast<double>(h.a);
  if (!(c > 0.0) || n_ref < 2 || !(2.0 * a * std::log(static_cast<double>(n_ref)) > c * c))
    throw InvalidParameter("anti-concentration needs 2 a log(n) > c^2 > 0");
  if (samples == 0) throw InvalidParameter("at least one sample is required");
  const PseudoDeviationSampler sampler(h, x);
  const double threshold = c * sampler.width();
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    if (sampler.sample(rng) > threshold) ++hits;
  }

  CheckReport r;
  r.quantity = "anticoncentration";
  r.num_samples = samples;
  r.empirical = static_cast<double>(hits) / static_cast<double>(samples);
  r.bound = anticoncentration_bound(h, c, n_ref);
  r.mc_stderr = proportion_stderr(r.empirical, samples);
  r.pass = r.empirical >= std::max(0.0, r.bound) - kSlackSigmas * r.mc_stderr;
  r.params = history_params(h, x);
  r.params["c"] = c;
  r.params["n_ref"] = n_ref;
  r.params["lambda_ratio"] = h.lambda / h.initial_min_eigenvalue();
  return r;
}

CheckReport check_symmetry(const FrozenHistory& h, const Vec& x, double eps,
                           std::size_t samples, RngStream& rng) {
  if (!(eps >= 0.0)) throw InvalidParameter("eps must be non-negative");
  if (samples < 2) throw InvalidParameter("at least two samples are required");
  const PseudoDeviationSampler sampler(h, x);
  std::size_t upper = 0, both = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double dev = sampler.sample(rng);
    if (dev > eps) ++upper;
    if (std::abs(dev) > eps) ++both;
  }
  // Paired statistic 1{D > eps} - 1{|D| > eps} / 2 takes values in
  // {1/2, -1/2, 0}; its variance follows from the two counts.
  const double n = static_cast<double>(samples);
  const double p_up = static_cast<double>(upper) / n;
  const double p_down = static_cast<double>(both - upper) / n;
  const double mean = 0.5 * (p_up - p_down);
  const double second = 0.25 * (p_up + p_down);
  const double var = std::max(0.0, second - mean * mean) * n / (n - 1.0);

  CheckReport r;
  r.quantity = "symmetry";
  r.num_samples = samples;
  r.empirical = p_up;
  r.bound = 0.5 * static_cast<double>(both) / n;
  r.mc_stderr = std::sqrt(var / n);
  r.pass = std::abs(r.empirical - r.bound) <= kSlackSigmas * r.mc_stderr;
  r.params = history_params(h, x);
  r.params["eps"] = eps;
  return r;
}

double width_sum_bound(Eigen::Index d, std::size_t horizon, double max_feature_norm,
                       double lambda) {
  const double dd = static_cast<double>(d);
  return 2.0 * dd *
         std::log(1.0 + static_cast<double>(horizon) * max_feature_norm * max_feature_norm /
                            (dd * lambda));
}

CheckReport check_width_sum(const RunRecord& run, Eigen::Index d, double max_feature_norm) {
  const std::size_t horizon = run.cum_regret.size();
  if (horizon > static_cast<std::size_t>(d) && run.width_lambda <= 0.0)
    throw InvalidParameter("run carries no width trace");
  double sum = 0.0;
  for (double w : run.width_trace) sum += w;

  CheckReport r;
  r.quantity = "width_sum";
  r.num_samples = run.width_trace.size();
  r.empirical = sum;
  const double lambda = run.width_lambda > 0.0 ? run.width_lambda : 1.0;
  r.bound = width_sum_bound(d, horizon, max_feature_norm, lambda);
  r.mc_stderr = 0.0;
  r.pass = r.empirical <= r.bound;
  r.params = {{"d", d},
              {"horizon", horizon},
              {"lambda", lambda},
              {"max_feature_norm", max_feature_norm},
              {"instance", run.instance_id},
              {"policy", run.policy_id}};
  return r;
}

CheckReport check_variance_dominance(const FrozenHistory& h, const Vec& x,
                                     std::size_t samples, RngStream& rng) {
  if (h.means.size() != h.length()) throw InvalidParameter("history carries no reward means");
  if (h.a < 1) throw InvalidParameter("variance dominance needs a >= 1");
  if (samples < 2) throw InvalidParameter("at least two samples are required");
  const PseudoDeviationSampler sampler(h, x);
  const Vec ginv_x = h.gram().solve(x);
  std::vector<double> weights(h.length());
  for (std::size_t l = 0; l < h.length(); ++l)
    weights[l] = ginv_x.dot(h.features.row(static_cast<Eigen::Index>(l)).transpose());

  std::vector<double> pseudo(samples), noise(samples);
  for (std::size_t s = 0; s < samples; ++s) pseudo[s] = sampler.sample(rng);
  for (std::size_t s = 0; s < samples; ++s) {
    double dev = 0.0;
    for (std::size_t l = 0; l < h.length(); ++l) {
      const double y = rng.uniform() < h.means[l] ? 1.0 : 0.0;
      dev += weights[l] * (y - h.means[l]);
    }
    noise[s] = dev;
  }
  const VarianceEstimate vp = estimate_variance(pseudo);
  const VarianceEstimate vn = estimate_variance(noise);

  CheckReport r;
  r.quantity = "variance_dominance";
  r.num_samples = samples;
  r.empirical = vp.variance;
  r.bound = vn.variance;
  r.mc_stderr = std::sqrt(vp.stderr_ * vp.stderr_ + vn.stderr_ * vn.stderr_);
  r.pass = r.empirical >= r.bound - kSlackSigmas * r.mc_stderr;
  r.params = history_params(h, x);
  return r;
}

double self_consistent_lambda(const Mat& features, Eigen::Index d) {
  if (features.rows() < d) throw InvalidParameter("need at least d pulls");
  const double eig = min_eigenvalue(first_rows_gram(features, d));
  if (!(eig > 0.0)) throw InvalidParameter("first d pulls must span the feature space");
  return eig / 3.0;
}

FrozenHistory make_fixture_history(Eigen::Index d, std::size_t num_arms, std::size_t rounds,
                                   double lambda, std::uint64_t a, RngStream& rng) {
  if (rounds < static_cast<std::size_t>(d)) throw InvalidParameter("need at least d rounds");
  const BanditInstance inst = gen_linear_instance(d, num_arms, rng);
  FrozenHistory h;
  h.features.resize(static_cast<Eigen::Index>(rounds), d);
  h.lambda = lambda;
  h.a = a;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const std::size_t arm = t <= static_cast<std::size_t>(d) ? initialization_arm(num_arms, t)
                                                             : rng.index(num_arms);
    h.features.row(static_cast<Eigen::Index>(t - 1)) = inst.features().row(static_cast<Eigen::Index>(arm));
    h.rewards.push_back(draw_reward(inst, arm, rng));
    h.means.push_back(inst.means()[arm]);
  }
  h.validate();
  return h;
}

Vec random_direction(Eigen::Index d, RngStream& rng) {
  Vec v(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
  } while (v.norm() == 0.0);
  return v.normalized();
}

// ---------------------------------------------------------------- suites

namespace {

class KeyReader {
 public:
  KeyReader(const nlohmann::json& doc, std::initializer_list<const char*> keys) : doc_(doc) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError("suite parameters must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) throw ConfigError(fmt::format("unknown suite parameter '{}'", key));
    }
  }

  template <typename T>
  void read(const char* key, T& out) const {
    if (doc_.is_null() || !doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(fmt::format("suite parameter '{}' has the wrong type", key));
    }
  }

 private:
  const nlohmann::json& doc_;
};

RngStream suite_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return RngStream(Lineage{seed, a, kFixtureStream, b});
}

std::vector<Vec> suite_directions(Eigen::Index d, std::size_t count, std::uint64_t seed) {
  RngStream rng = suite_stream(seed, 0, 1);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(random_direction(d, rng));
  return out;
}

void check_common(Eigen::Index d, std::size_t num_arms, std::size_t rounds) {
  if (d < 2 || num_arms < static_cast<std::size_t>(d) || rounds < static_cast<std::size_t>(d))
    throw ConfigError("suite needs d >= 2, K >= d and rounds >= d");
}

}  // namespace

ConcentrationSuite concentration_suite_from_json(const nlohmann::json& doc) {
  ConcentrationSuite s;
  KeyReader r(doc, {"d", "K", "rounds", "lambda", "a", "c", "directions", "samples"});
  r.read("d", s.d);
  r.read("K", s.num_arms);
  r.read("rounds", s.rounds);
  r.read("lambda", s.lambda);
  r.read("a", s.a_values);
  r.read("c", s.c_values);
  r.read("directions", s.directions);
  r.read("samples", s.samples);
  return s;
}

AnticoncentrationSuite anticoncentration_suite_from_json(const nlohmann::json& doc) {
  AnticoncentrationSuite s;
  KeyReader r(doc, {"d", "K", "rounds", "c", "n_ref", "directions", "samples"});
  r.read("d", s.d);
  r.read("K", s.num_arms);
  r.read("rounds", s.rounds);
  r.read("c", s.c);
  r.read("n_ref", s.n_ref);
  r.read("directions", s.directions);
  r.read("samples", s.samples);
  return s;
}

WidthSumSuite width_sum_suite_from_json(const nlohmann::json& doc) {
  WidthSumSuite s;
  KeyReader r(doc, {"runs", "d", "K", "n", "a", "lambda"});
  r.read("runs", s.runs);
  r.read("d", s.d);
  r.read("K", s.num_arms);
  r.read("n", s.horizon);
  r.read("a", s.a);
  r.read("lambda", s.lambda);
  return s;
}

VarianceSuite variance_suite_from_json(const nlohmann::json& doc) {
  VarianceSuite s;
  KeyReader r(doc, {"d", "K", "rounds", "a", "directions", "samples"});
  r.read("d", s.d);
  r.read("K", s.num_arms);
  r.read("rounds", s.rounds);
  r.read("a", s.a_values);
  r.read("directions", s.directions);
  r.read("samples", s.samples);
  return s;
}

std::vector<CheckReport> run_suite(const ConcentrationSuite& s, std::uint64_t seed) {
  check_common(s.d, s.num_arms, s.rounds);
  RngStream fixture_rng = suite_stream(seed, 0, 0);
  FrozenHistory h = make_fixture_history(s.d, s.num_arms, s.rounds, s.lambda, 1, fixture_rng);
  const auto dirs = suite_directions(s.d, s.directions, seed);
  std::vector<CheckReport> out;
  std::uint64_t job = 0;
  for (std::uint64_t a : s.a_values) {
    if (a < 1) throw ConfigError("concentration suite needs integer a >= 1");
    h.a = a;
    for (double c : s.c_values) {
      for (const Vec& x : dirs) {
        RngStream rng = suite_stream(seed, ++job, 2);
        out.push_back(check_concentration(h, x, c, s.samples, rng));
      }
    }
  }
  return out;
}

std::vector<CheckReport> run_suite(const AnticoncentrationSuite& s, std::uint64_t seed) {
  check_common(s.d, s.num_arms, s.rounds);
  RngStream fixture_rng = suite_stream(seed, 0, 0);
  const auto a = static_cast<std::uint64_t>(std::ceil(16.0 * s.c * s.c));
  FrozenHistory h = make_fixture_history(s.d, s.num_arms, s.rounds, 1.0, a, fixture_rng);
  h.lambda = self_consistent_lambda(h.features, h.dim());
  const auto dirs = suite_directions(s.d, s.directions, seed);
  std::vector<CheckReport> out;
  std::uint64_t job = 0;
  for (const Vec& x : dirs) {
    RngStream rng = suite_stream(seed, ++job, 3);
    out.push_back(check_anticoncentration(h, x, s.c, s.n_ref, s.samples, rng));
    const double eps = s.c * h.gram().quad_norm(x);
    RngStream sym_rng = suite_stream(seed, job, 4);
    out.push_back(check_symmetry(h, x, eps, s.samples, sym_rng));
  }
  return out;
}

std::vector<CheckReport> run_suite(const WidthSumSuite& s, std::uint64_t seed) {
  check_common(s.d, s.num_arms, s.horizon);
  std::vector<CheckReport> out;
  for (std::size_t i = 0; i < s.runs; ++i) {
    RngStream inst_rng(Lineage{seed, i, kInstanceStream, 0});
    const BanditInstance inst = gen_linear_instance(s.d, s.num_arms, inst_rng);
    LinPhe policy(inst.features(), LinPhe::Options{s.a, s.lambda});
    EpisodeOptions opts;
    opts.master_seed = seed;
    opts.instance_id = i;
    opts.policy_id = fmt::format("linphe-a{:g}", s.a);
    opts.width_lambda = s.lambda;
    const RunRecord rec = run_episode(inst, policy, s.horizon, opts);
    if (rec.failed) throw SolverError(rec.error);
    out.push_back(check_width_sum(rec, s.d, inst.max_feature_norm()));
  }
  return out;
}

std::vector<CheckReport> run_suite(const VarianceSuite& s, std::uint64_t seed) {
  check_common(s.d, s.num_arms, s.rounds);
  RngStream fixture_rng = suite_stream(seed, 0, 0);
  FrozenHistory h = make_fixture_history(s.d, s.num_arms, s.rounds, 1.0, 1, fixture_rng);
  const auto dirs = suite_directions(s.d, s.directions, seed);
  std::vector<CheckReport> out;
  std::uint64_t job = 0;
  for (std::uint64_t a : s.a_values) {
    h.a = a;
    for (const Vec& x : dirs) {
      RngStream rng = suite_stream(seed, ++job, 5);
      out.push_back(check_variance_dominance(h, x, s.samples, rng));
    }
  }
  return out;
}

}  // namespace phe
