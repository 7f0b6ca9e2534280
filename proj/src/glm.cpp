#include "phe/glm.hpp"

#include <cmath>

#include "phe/environment.hpp"
#include "phe/error.hpp"

namespace phe {

void WeightedLogit::validate() const {
  if (!(lambda >= 0.0)) throw InvalidParameter("logistic regularizer must be non-negative");
  for (const auto& row : rows) {
    if (row.x.size() != dim) throw InvalidParameter("logistic row has wrong dimension");
    if (!(row.ones >= 0.0) || !(row.ones <= row.total))
      throw InvalidParameter("logistic row needs 0 <= ones <= total");
  }
}

double log_sigmoid(double s) {
  if (s >= 0.0) return -std::log1p(std::exp(-s));
  return s - std::log1p(std::exp(s));
}

double objective(const WeightedLogit& prob, const Vec& theta) {
  double value = prob.lambda * theta.squaredNorm();
  for (const auto& row : prob.rows) {
    const double s = row.x.dot(theta);
    // log(1 - sigmoid(s)) = log_sigmoid(-s)
    value -= row.ones * log_sigmoid(s) + (row.total - row.ones) * log_sigmoid(-s);
  }
  return value;
}

Vec gradient(const WeightedLogit& prob, const Vec& theta) {
  Vec g = 2.0 * prob.lambda * theta;
  for (const auto& row : prob.rows) {
    const double p = sigmoid(row.x.dot(theta));
    g -= row.x * (row.ones - row.total * p);
  }
  return g;
}

Mat hessian(const WeightedLogit& prob, const Vec& theta) {
  const Eigen::Index d = theta.size();
  Mat h = Mat::Identity(d, d) * (2.0 * prob.lambda);
  for (const auto& row : prob.rows) {
    const double p = sigmoid(row.x.dot(theta));
    const double w = row.total * p * (1.0 - p);
    if (w > 0.0) h.selfadjointView<Eigen::Lower>().rankUpdate(row.x, w);
  }
  return h.selfadjointView<Eigen::Lower>();
}

SolverResult fit(const WeightedLogit& prob, const SolverOptions& opts, const Vec& start) {
  prob.validate();
  SolverResult result;
  result.theta = start.size() == prob.dim ? start : Vec::Zero(prob.dim);

  double value = objective(prob, result.theta);
  Vec g = gradient(prob, result.theta);
  result.grad_norm = g.norm();

  while (result.grad_norm > opts.tol && result.iterations < opts.max_iter) {
    ++result.iterations;
    const Mat h = hessian(prob, result.theta);
    Eigen::LDLT<Mat> ldlt(h);
    if (ldlt.info() != Eigen::Success) break;
    const Vec step = ldlt.solve(g);
    if (!step.allFinite()) break;

    // Halve the Newton step until the objective stops increasing. Close to
    // the optimum rounding can hide a genuine decrease, so a step that keeps
    // the objective level while shrinking the gradient is accepted too.
    bool accepted = false;
    double t = 1.0;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      Vec candidate = result.theta - t * step;
      const double cand_value = objective(prob, candidate);
      if (!std::isfinite(cand_value)) continue;
      const double level = 1e-13 * (1.0 + std::abs(value));
      bool take = cand_value < value;
      Vec cand_g;
      if (!take && cand_value <= value + level) {
        cand_g = gradient(prob, candidate);
        take = cand_g.norm() < result.grad_norm;
      }
      if (take) {
        result.theta = std::move(candidate);
        value = cand_value;
        g = cand_g.size() ? std::move(cand_g) : gradient(prob, result.theta);
        result.grad_norm = g.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  result.converged = result.grad_norm <= opts.tol;
  return result;
}

}  // namespace phe
