#include "phe/linalg.hpp"

#include <cmath>

#include "phe/error.hpp"
#include "phe/rng.hpp"

namespace phe {

PosDefState::PosDefState(Eigen::Index d, double lambda, double scale)
    : lambda_(lambda), scale_(scale) {
  if (d < 1) throw InvalidParameter("gram dimension must be at least 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidParameter("gram regularizer must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidParameter("gram scale must be positive");
  const double diag = lambda * scale;
  gram_ = Mat::Identity(d, d) * diag;
  inverse_ = Mat::Identity(d, d) / diag;
}

void PosDefState::rank_one_update(const Vec& x) {
  if (x.size() != dim()) throw InvalidParameter("update vector has wrong dimension");
  if (x.isZero(0.0)) return;

  gram_.noalias() += scale_ * x * x.transpose();

  // (A + s x x^T)^-1 = A^-1 - s (A^-1 x)(A^-1 x)^T / (1 + s x^T A^-1 x)
  const Vec u = inverse_ * x;
  const double denom = 1.0 + scale_ * x.dot(u);
  inverse_.noalias() -= (scale_ / denom) * u * u.transpose();
  // Keep the stored inverse exactly symmetric.
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();

  if (++updates_since_refresh_ >= kRefreshPeriod) refresh();
}

double PosDefState::quad_form(const Vec& x) const {
  return std::max(0.0, x.dot(inverse_ * x));
}

double PosDefState::quad_norm(const Vec& x) const { return std::sqrt(quad_form(x)); }

Vec PosDefState::solve(const Vec& b) const {
  if (b.size() != dim()) throw InvalidParameter("right-hand side has wrong dimension");
  return inverse_ * b;
}

void PosDefState::refresh() {
  inverse_ = spd_inverse(gram_);
  updates_since_refresh_ = 0;
}

Mat spd_inverse(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw DecompositionError("matrix is not positive definite");
  Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Vec sample_mvn(const Vec& mean, const Mat& cov, RngStream& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw InvalidParameter("covariance shape does not match mean");
  if (!cov.isApprox(cov.transpose(), 1e-10))
    throw DecompositionError("covariance is not symmetric");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw DecompositionError("covariance is not positive definite");
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

}  // namespace phe
