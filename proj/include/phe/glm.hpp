#pragma once

#include <cstddef>
#include <vector>

#include "phe/linalg.hpp"

namespace phe {

// `total` Bernoulli observations at feature x, `ones` of them positive.
struct LogitRow {
  Vec x;
  double ones = 0.0;
  double total = 0.0;
};

// Regularized logistic regression over grouped observations:
//   minimize lambda ||theta||^2 - sum_rows [ones log s(x'theta)
//                                           + (total - ones) log(1 - s(x'theta))]
struct WeightedLogit {
  std::vector<LogitRow> rows;
  double lambda = 0.0;
  Eigen::Index dim = 0;

  // Throws InvalidParameter if a row has the wrong dimension or violates
  // 0 <= ones <= total, or if lambda is negative.
  void validate() const;
};

struct SolverOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100;
};

struct SolverResult {
  Vec theta;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// log(sigmoid(s)) without overflow for any finite s.
double log_sigmoid(double s);

double objective(const WeightedLogit& prob, const Vec& theta);
Vec gradient(const WeightedLogit& prob, const Vec& theta);
Mat hessian(const WeightedLogit& prob, const Vec& theta);

// Damped Newton iterations from `start` (zero when empty) until the gradient
// norm drops to opts.tol or opts.max_iter is reached.
SolverResult fit(const WeightedLogit& prob, const SolverOptions& opts = {},
                 const Vec& start = Vec());

}  // namespace phe
