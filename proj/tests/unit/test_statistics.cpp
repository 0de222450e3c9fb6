#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "gmc/errors.hpp"
#include "gmc/rng.hpp"
#include "gmc/statistics.hpp"

using namespace gmc;

TEST(McMean, StandardErrorIsSampleSdOverRootN) {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8};
  const McEstimate m = mc_mean(xs);
  EXPECT_DOUBLE_EQ(m.value, 4.5);
  // sample SD of 1..8 is sqrt(6)
  EXPECT_NEAR(m.se, std::sqrt(6.0) / std::sqrt(8.0), 1e-14);
  EXPECT_EQ(m.n, 8u);
}

TEST(SampleVariance, UnbiasedOnKnownData) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_NEAR(sample_variance(xs).value, 32.0 / 7.0, 1e-13);
}

TEST(SampleCorrelation, PerfectLinearRelation) {
  std::vector<double> a(50), b(50);
  std::iota(a.begin(), a.end(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = -3 * a[i] + 1;
  EXPECT_NEAR(sample_correlation(a, b).value, -1.0, 1e-12);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 1.0), 4.0);
}

TEST(ZScore, CombinedError) {
  EXPECT_DOUBLE_EQ(z_score(McEstimate{1.0, 3.0, 10}, McEstimate{5.0, 4.0, 10}), 0.8);
  EXPECT_DOUBLE_EQ(z_score(McEstimate{2.0, 0.5, 10}, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(z_score(McEstimate{1.0, 0.0, 1}, 1.0), 0.0);
}

TEST(Seeds, PureFunctionOfMasterReplicaLabel) {
  EXPECT_EQ(derive_seed(7, 3, "field"), derive_seed(7, 3, "field"));
  EXPECT_NE(derive_seed(7, 3, "field"), derive_seed(7, 4, "field"));
  EXPECT_NE(derive_seed(7, 3, "field"), derive_seed(8, 3, "field"));
  EXPECT_NE(derive_seed(7, 3, "field"), derive_seed(7, 3, "mollified"));
  NormalStream a(1, 2, "x"), b(1, 2, "x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}

TEST(Seeds, NormalStreamMoments) {
  NormalStream g(42, 0, "moments");
  std::vector<double> xs(200000);
  for (double& x : xs) x = g();
  EXPECT_LT(z_score(mc_mean(xs), 0.0), 4.0);
  EXPECT_NEAR(sample_variance(xs).value, 1.0, 0.015);
}
