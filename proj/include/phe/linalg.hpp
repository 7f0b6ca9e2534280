#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace phe {

class RngStream;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Gram matrix scale * (lambda * I + sum x x^T) together with its inverse.
//
// The inverse is maintained by Sherman-Morrison rank-one updates and is
// recomputed from a Cholesky factorization of the Gram matrix every
// kRefreshPeriod updates, which keeps ||G * Ginv - I||_max below 1e-6.
class PosDefState {
 public:
  static constexpr std::size_t kRefreshPeriod = 512;

  // Throws InvalidParameter unless d >= 1, lambda > 0 and scale > 0.
  PosDefState(Eigen::Index d, double lambda, double scale = 1.0);

  // G += scale * x x^T. A zero vector leaves the state untouched.
  void rank_one_update(const Vec& x);

  // sqrt(x^T Ginv x).
  double quad_norm(const Vec& x) const;
  // x^T Ginv x, without the square root.
  double quad_form(const Vec& x) const;
  // Ginv * b.
  Vec solve(const Vec& b) const;

  // Recomputes Ginv from G directly.
  void refresh();

  Eigen::Index dim() const { return gram_.rows(); }
  double lambda() const { return lambda_; }
  double scale() const { return scale_; }
  std::size_t updates_since_refresh() const { return updates_since_refresh_; }
  const Mat& gram() const { return gram_; }
  const Mat& inverse() const { return inverse_; }

 private:
  Mat gram_;
  Mat inverse_;
  double lambda_;
  double scale_;
  std::size_t updates_since_refresh_ = 0;
};

// Convenience wrapper matching the free-function vocabulary used elsewhere.
inline PosDefState init_gram(Eigen::Index d, double lambda, double scale) {
  return PosDefState(d, lambda, scale);
}

// Inverse of a symmetric positive definite matrix through Cholesky.
// Throws DecompositionError if the matrix is not positive definite.
Mat spd_inverse(const Mat& m);

// One draw from N(mean, cov) as mean + L z with cov = L L^T.
// Throws DecompositionError if cov is not symmetric positive definite.
Vec sample_mvn(const Vec& mean, const Mat& cov, RngStream& rng);

}  // namespace phe
