#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rprec/error.hpp"
#include "rprec/matcore.hpp"
#include "rprec/randproj.hpp"
#include "rprec/rng.hpp"

namespace rprec {
namespace {

DataMatrix normalized(const DenseMatrix& x) {
  return DataMatrix(oracle::normalize_rows(x), SignalState::kNormalized);
}

// N x T matrix with singular values sigma_k = k^(-decay) (k = 1..min(N, T)).
DenseMatrix power_law(int n, int t, double decay, oracle::TestRng& rng) {
  const int r = std::min(n, t);
  const DenseMatrix u = oracle::random_orthonormal(n, r, rng);
  const DenseMatrix v = oracle::random_orthonormal(t, r, rng);
  Vector s(r);
  for (int k = 0; k < r; ++k) s(k) = std::pow(k + 1.0, -decay);
  return u * s.asDiagonal() * v.transpose();
}

TEST(CounterRng, StreamsAreReproducibleAndIndependentOfOrder) {
  CounterRng a(42, 0);
  CounterRng b(42, 1);
  const std::uint64_t a0 = a.next_u64();
  const std::uint64_t b0 = b.next_u64();
  CounterRng b_again(42, 1);
  CounterRng a_again(42, 0);
  EXPECT_EQ(b_again.next_u64(), b0);
  EXPECT_EQ(a_again.next_u64(), a0);
  EXPECT_NE(a0, b0);
}

TEST(CounterRng, UniformsInOpenIntervalAndGaussianMoments) {
  CounterRng rng(7, 3);
  double sum = 0.0;
  double sq = 0.0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double u = rng.next_uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double g = rng.next_gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / count, 0.0, 0.01);
  EXPECT_NEAR(sq / count, 1.0, 0.01);
}

TEST(InverseNormalCdf, KnownQuantiles) {
  EXPECT_NEAR(inverse_normal_cdf(0.5), 0.0, 1e-15);
  EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-13);
  EXPECT_NEAR(inverse_normal_cdf(0.025), -1.959963984540054, 1e-13);
  EXPECT_NEAR(inverse_normal_cdf(1e-10), -6.361340902404056, 1e-11);
  for (double p : {1e-300, 1e-12, 0.1, 0.3, 0.7, 0.9, 1 - 1e-12}) {
    const double x = inverse_normal_cdf(p);
    EXPECT_NEAR(0.5 * std::erfc(-x / std::sqrt(2.0)) / p, 1.0, 1e-13);
  }
}

TEST(RandomProject, FullDimensionPreservesNorm) {
  oracle::TestRng rng(1);
  const DataMatrix x = normalized(rng.gaussian(12, 30));
  const Projection p = random_project(x, ProjectionConfig{30, 0, 9});
  EXPECT_NEAR(p.projected.values().norm(), x.values().norm(), 1e-9);
  EXPECT_NEAR(retained_energy(x, p.projected), 1.0, 1e-12);
  EXPECT_EQ(p.projected.state(), SignalState::kProjected);
  EXPECT_EQ(p.projected.sample_count(), 30);
}

TEST(RandomProject, BasisOrthonormalAndProductExact) {
  oracle::TestRng rng(2);
  const DataMatrix x = normalized(rng.gaussian(20, 60));
  const Projection p = random_project(x, ProjectionConfig{8, 2, 5});
  EXPECT_LE((p.basis.transpose() * p.basis - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LE((p.projected.values() - x.values() * p.basis).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RandomProject, ExactRankIsCaptured) {
  oracle::TestRng rng(3);
  const DenseMatrix x = rng.gaussian(40, 5) * rng.gaussian(5, 200);
  const DataMatrix data(x);
  for (Index t : {5, 8}) {
    const Projection p = random_project(data, ProjectionConfig{t, 1, 17});
    EXPECT_GE(p.projected.values().norm(), 0.999 * x.norm());
  }
}

TEST(RandomProject, RankTenToTenWithPowerIterations) {
  oracle::TestRng rng(4);
  const DenseMatrix x = rng.gaussian(50, 10) * rng.gaussian(10, 300);
  const DataMatrix data(x);
  EXPECT_GE(retained_energy(data, random_project(data, ProjectionConfig{10, 3, 1}).projected),
            0.999);
}

TEST(RandomProject, TopSingularValuesWithinFivePercent) {
  oracle::TestRng rng(5);
  const DataMatrix x(power_law(60, 400, 1.0, rng));
  const Projection p = random_project(x, ProjectionConfig{80, 3, 23});
  const Vector sx = svd(x.values()).singular_values;
  const Vector sy = svd(p.projected.values()).singular_values;
  for (int k = 0; k < 60; ++k) EXPECT_LE(std::abs(sy(k) - sx(k)), 0.05 * sx(k)) << k;
}

TEST(RandomProject, InterlacingHolds) {
  oracle::TestRng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const DataMatrix x(rng.gaussian(15, 40));
    const Projection p = random_project(x, ProjectionConfig{10, trial % 3, 100u + trial});
    const Vector sx = svd(x.values()).singular_values;
    const Vector sy = svd(p.projected.values()).singular_values;
    for (Index k = 0; k < sy.size(); ++k) EXPECT_LE(sy(k), sx(k) + 1e-9);
  }
}

TEST(RandomProject, EnergyNonDecreasingInPowerIterations) {
  oracle::TestRng rng(7);
  int violations = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const DataMatrix x(power_law(40, 200, 0.7, rng));
    double previous = 0.0;
    for (int q : {0, 1, 3}) {
      const double e =
          retained_energy(x, random_project(x, ProjectionConfig{8, q, 1000u + seed}).projected);
      if (e < previous - 1e-12) ++violations;
      previous = e;
    }
  }
  EXPECT_LE(violations, 2);
}

TEST(RandomProject, DeterministicForFixedSeed) {
  oracle::TestRng rng(8);
  const DataMatrix x(rng.gaussian(10, 50));
  const Projection a = random_project(x, ProjectionConfig{6, 2, 77});
  const Projection b = random_project(x, ProjectionConfig{6, 2, 77});
  EXPECT_EQ(a.projected.values(), b.projected.values());
  const Projection c = random_project(x, ProjectionConfig{6, 2, 78});
  EXPECT_NE(a.projected.values(), c.projected.values());
}

TEST(RandomProject, RefillsWhenTargetExceedsRank) {
  oracle::TestRng rng(9);
  const DataMatrix x(rng.gaussian(6, 2) * rng.gaussian(2, 30));
  const Projection p = random_project(x, ProjectionConfig{5, 2, 3});
  EXPECT_LE((p.basis.transpose() * p.basis - DenseMatrix::Identity(5, 5)).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_NEAR(retained_energy(x, p.projected), 1.0, 1e-10);
}

TEST(RandomProject, TargetLargerThanSamplesRejected) {
  const DataMatrix x(DenseMatrix::Ones(3, 4));
  try {
    random_project(x, ProjectionConfig{5, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(TruncateSvd, KeepsTopRightSingularVectors) {
  oracle::TestRng rng(10);
  const DataMatrix x(rng.gaussian(8, 30));
  const Projection p = truncate_svd(x, 3);
  const Vector sx = svd(x.values()).singular_values;
  EXPECT_NEAR(p.projected.values().squaredNorm(), sx.head(3).squaredNorm(), 1e-10);
  const Projection wide = truncate_svd(x, 20);
  EXPECT_NEAR(retained_energy(x, wide.projected), 1.0, 1e-12);
}

TEST(RetainedEnergy, ZeroProjectionAndZeroInput) {
  oracle::TestRng rng(11);
  const DataMatrix x(rng.gaussian(4, 10));
  EXPECT_EQ(retained_energy(x, DataMatrix(DenseMatrix::Zero(4, 3))), 0.0);
  EXPECT_THROW(retained_energy(DataMatrix(DenseMatrix::Zero(4, 3)), x), Error);
}

}  // namespace
}  // namespace rprec
