#pragma once

// Independent reference computations for the tests. Nothing here calls the
// code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace phe::oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Gram matrix built by explicit summation and inverted by LU.
inline Mat direct_inverse(const Mat& m) { return m.fullPivLu().inverse(); }

inline Mat batch_gram(const std::vector<Vec>& xs, double lambda, double scale) {
  const auto d = xs.empty() ? 0 : xs.front().size();
  Mat g = Mat::Identity(d, d) * lambda;
  for (const auto& x : xs) g += x * x.transpose();
  return scale * g;
}

// Per-pull perturbed least squares:
//   (scale * (sum X X^T + lambda I))^-1 sum_l X_l [Y_l + z_l].
inline Vec naive_perturbed_estimate(const std::vector<Vec>& xs, const std::vector<double>& ys,
                                    const std::vector<double>& pseudo, double lambda,
                                    double scale) {
  const Mat g = batch_gram(xs, lambda, scale);
  Vec b = Vec::Zero(g.rows());
  for (std::size_t l = 0; l < xs.size(); ++l) b += xs[l] * (ys[l] + pseudo[l]);
  return direct_inverse(g) * b;
}

// Exact B(n, 1/2) pmf by the multiplicative recursion.
inline std::vector<double> binomial_half_pmf(std::uint64_t n) {
  std::vector<long double> p(n + 1);
  p[0] = std::pow(0.5L, static_cast<long double>(n));
  for (std::uint64_t k = 0; k < n; ++k)
    p[k + 1] = p[k] * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
  return {p.begin(), p.end()};
}

// Central finite differences of a scalar function.
inline Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                                      double step) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec up = x, down = x;
    up[i] += step;
    down[i] -= step;
    g[i] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

// Regularized negative log-likelihood summed one observation at a time.
inline double ungrouped_objective(const std::vector<Vec>& xs, const std::vector<int>& labels,
                                  double lambda, const Vec& theta) {
  double value = lambda * theta.squaredNorm();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-xs[i].dot(theta)));
    value -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return value;
}

// Exact distribution of D = sum_l w_l sum_{j<a} (Z_jl - 1/2) by enumerating
// all 2^(a * L) Bernoulli outcomes. Returns P(pred(D)).
inline double enumerate_deviation_probability(const std::vector<double>& weights, std::uint64_t a,
                                              const std::function<bool(double)>& pred) {
  const std::size_t m = weights.size() * a;
  const std::uint64_t outcomes = std::uint64_t{1} << m;
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
    double dev = 0.0;
    for (std::size_t bit = 0; bit < m; ++bit) {
      const double z = (mask >> bit) & 1U ? 0.5 : -0.5;
      dev += weights[bit / a] * z;
    }
    if (pred(dev)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outcomes);
}

}  // namespace phe::oracle
