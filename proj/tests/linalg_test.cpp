#include "phe/linalg.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phe/error.hpp"
#include "phe/rng.hpp"

namespace phe {
namespace {

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

Vec random_vec(Eigen::Index d, RngStream& rng) {
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

TEST(PosDefState, InitIdentity) {
  const auto s = init_gram(2, 1.0, 1.0);
  EXPECT_EQ(s.gram(), Mat::Identity(2, 2));
  EXPECT_EQ(s.inverse(), Mat::Identity(2, 2));
}

TEST(PosDefState, InitScaledByPerturbation) {
  // lambda (a + 1) I with a = 2.
  const auto s = init_gram(2, 1.0, 3.0);
  EXPECT_EQ(s.gram(), 3.0 * Mat::Identity(2, 2));
  EXPECT_LT(max_abs(s.inverse() - Mat::Identity(2, 2) / 3.0), 1e-15);
}

TEST(PosDefState, InitOneByOne) {
  const auto s = init_gram(1, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(s.gram()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.inverse()(0, 0), 1.0);
}

TEST(PosDefState, RejectsBadParameters) {
  EXPECT_THROW(init_gram(2, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(init_gram(2, -1.0, 1.0), InvalidParameter);
  EXPECT_THROW(init_gram(2, 1.0, 0.0), InvalidParameter);
  EXPECT_THROW(init_gram(0, 1.0, 1.0), InvalidParameter);
}

TEST(PosDefState, RankOneUpdateUnitVector) {
  auto s = init_gram(2, 1.0, 1.0);
  s.rank_one_update(Vec::Unit(2, 0));
  Mat expected(2, 2);
  expected << 0.5, 0.0, 0.0, 1.0;
  EXPECT_LT(max_abs(s.inverse() - expected), 1e-15);
}

TEST(PosDefState, ZeroUpdateIsNoOp) {
  auto s = init_gram(3, 2.0, 1.5);
  const Mat g = s.gram(), inv = s.inverse();
  s.rank_one_update(Vec::Zero(3));
  EXPECT_EQ(s.gram(), g);
  EXPECT_EQ(s.inverse(), inv);
  EXPECT_EQ(s.updates_since_refresh(), 0U);
}

TEST(PosDefState, MaintainedInverseMatchesDirectInverse) {
  RngStream rng(11);
  auto s = init_gram(5, 0.7, 1.0);
  std::vector<Vec> xs;
  for (int i = 0; i < 200; ++i) {
    xs.push_back(random_vec(5, rng));
    s.rank_one_update(xs.back());
  }
  const Mat g = oracle::batch_gram(xs, 0.7, 1.0);
  EXPECT_LT(max_abs(s.gram() - g), 1e-9);
  EXPECT_LT(max_abs(s.inverse() - oracle::direct_inverse(g)), 1e-8);
}

TEST(PosDefState, RefreshResetsCounterAndKeepsIdentityResidual) {
  RngStream rng(5);
  auto s = init_gram(4, 1.0, 2.0);
  const Mat eye = Mat::Identity(4, 4);
  for (std::size_t i = 0; i < 3 * PosDefState::kRefreshPeriod + 7; ++i) {
    s.rank_one_update(random_vec(4, rng));
    ASSERT_LT(max_abs(s.gram() * s.inverse() - eye), 1e-6) << "after update " << i;
  }
  EXPECT_EQ(s.updates_since_refresh(), 7U);
}

TEST(PosDefState, QuadNormExamples) {
  const auto id = init_gram(2, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(id.quad_norm(Vec::Zero(2)), 0.0);
  Vec x(2);
  x << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(id.quad_norm(x), 5.0);

  // G = diag(4, 1) from lambda = 1 plus 3 e1 e1^T.
  auto s = init_gram(2, 1.0, 1.0);
  s.rank_one_update(Vec::Unit(2, 0) * std::sqrt(3.0));
  Vec y(2);
  y << 2.0, 0.0;
  EXPECT_NEAR(s.quad_norm(y), 1.0, 1e-14);
}

TEST(PosDefState, SolveExamples) {
  Vec b(2);
  b << 4.0, 6.0;
  EXPECT_EQ(init_gram(2, 1.0, 1.0).solve(b), b);
  const Vec out = init_gram(2, 2.0, 1.0).solve(b);
  EXPECT_DOUBLE_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], 3.0);
}

TEST(PosDefState, SolveMatchesFactorizationOracle) {
  RngStream rng(3);
  auto s = init_gram(4, 1.0, 1.0);
  std::vector<Vec> xs;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(random_vec(4, rng));
    s.rank_one_update(xs.back());
  }
  const Vec b = random_vec(4, rng);
  const Vec expected = oracle::batch_gram(xs, 1.0, 1.0).fullPivLu().solve(b);
  EXPECT_LT((s.solve(b) - expected).cwiseAbs().maxCoeff(), 1e-9);
}

// Properties over random update sequences.
TEST(PosDefState, QuadNormAgreesWithSolveAndIsMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(seed % 6);
    auto s = init_gram(d, 0.5 + rng.uniform(), 1.0 + rng.uniform());
    const Vec probe = random_vec(d, rng);
    double previous = s.quad_norm(probe);
    for (int i = 0; i < 50; ++i) {
      s.rank_one_update(random_vec(d, rng));
      const double q = s.quad_norm(probe);
      const double via_solve = probe.dot(s.solve(probe));
      ASSERT_NEAR(q * q, via_solve, 1e-10 * std::abs(via_solve));
      ASSERT_LE(q, previous * (1.0 + 1e-12));
      previous = q;
    }
  }
}

TEST(PosDefState, FinalGramIndependentOfRefreshTiming) {
  RngStream rng(8);
  std::vector<Vec> xs;
  for (int i = 0; i < 700; ++i) xs.push_back(random_vec(3, rng));
  auto a = init_gram(3, 1.0, 2.0);
  auto b = init_gram(3, 1.0, 2.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    a.rank_one_update(xs[i]);
    b.rank_one_update(xs[i]);
    if (i % 37 == 0) b.refresh();
  }
  EXPECT_LT(max_abs(a.gram() - b.gram()), 1e-9);
  EXPECT_LT(max_abs(a.gram() - oracle::batch_gram(xs, 1.0, 2.0)), 1e-9);
}

TEST(SampleMvn, RejectsNonPositiveDefinite) {
  RngStream rng(1);
  EXPECT_THROW(sample_mvn(Vec::Zero(2), Mat::Zero(2, 2), rng), DecompositionError);
  Mat indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(sample_mvn(Vec::Zero(2), indefinite, rng), DecompositionError);
}

TEST(SampleMvn, SampleMeanConverges) {
  constexpr int kDraws = 100000;
  for (double center : {0.0, 5.0}) {
    RngStream rng(42);
    const Vec mean = Vec::Constant(2, center);
    Vec sum = Vec::Zero(2);
    for (int i = 0; i < kDraws; ++i) sum += sample_mvn(mean, Mat::Identity(2, 2), rng);
    sum /= kDraws;
    // 3 sigma of the sample mean is 3 / sqrt(1e5) ~ 0.0095.
    EXPECT_NEAR(sum[0], center, 0.02);
    EXPECT_NEAR(sum[1], center, 0.02);
  }
}

TEST(SampleMvn, Deterministic) {
  Mat cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  RngStream a(Lineage{1, 2, 3, 4}), b(Lineage{1, 2, 3, 4});
  EXPECT_EQ(sample_mvn(Vec::Ones(2), cov, a), sample_mvn(Vec::Ones(2), cov, b));
}

}  // namespace
}  // namespace phe
