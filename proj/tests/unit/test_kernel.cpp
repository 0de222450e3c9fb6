#include <cmath>

#include <gtest/gtest.h>

#include "common.hpp"
#include "gmc/errors.hpp"
#include "gmc/factor.hpp"
#include "gmc/kernel.hpp"

using namespace gmc;
using gmc::test::kernel_1d;

TEST(SmoothingKernel, NormalisedAndCompactlySupported) {
  const auto& kappa = kernel_1d().kappa();
  EXPECT_NEAR(kappa(0.0), 1.0, 1e-12);
  EXPECT_EQ(kappa(1.0), 0.0);
  EXPECT_EQ(kappa(1.5), 0.0);
  EXPECT_GT(kappa(0.5), 0.0);
  EXPECT_LT(kappa(0.5), 1.0);
}

TEST(SmoothingKernel, TableMatchesDirectConvolution) {
  const auto& kappa = kernel_1d().kappa();
  const double c0 = SmoothingKernel::self_convolution(BumpFamily::Exp, 1, 0.0);
  for (double r : {0.1, 0.35, 0.7, 0.95})
    EXPECT_NEAR(kappa(r), SmoothingKernel::self_convolution(BumpFamily::Exp, 1, r) / c0, 1e-7);
}

TEST(SmoothingKernel, FourierTransformNonnegative) {
  const auto& kappa = kernel_1d().kappa();
  for (double xi : {0.0, 1.0, 3.0, 7.5, 15.0, 40.0}) EXPECT_GE(kappa.fourier(xi), -1e-10);
}

TEST(Tprime, SolvesDefiningEquation) {
  EXPECT_EQ(solve_tprime(0.5, 1.0, 0.0), 0.0);
  for (double t : {0.01, 0.5, 2.0, 10.0}) {
    const double tp = solve_tprime(0.5, 1.0, t);
    EXPECT_NEAR(tp - 0.5 * (1 - std::exp(-tp)), t, 1e-12);
  }
}

TEST(Kbar, DiagonalIsExactlyT) {
  for (double t : {0.0, 0.3, 1.0, 5.0, 16.0}) EXPECT_EQ(kernel_1d().kbar(t, 0.0), t);
}

TEST(Kbar, VanishesBeyondUnitSeparation) {
  EXPECT_EQ(kernel_1d().kbar(4.0, 1.0), 0.0);
  EXPECT_EQ(kernel_1d().kbar(4.0, 1.2), 0.0);
  EXPECT_EQ(eval_kbar(kernel_1d(), 4.0, {0.2, 0}, {1.4, 0}), 0.0);
}

TEST(Kbar, TableMatchesQuadrature) {
  const auto& k = kernel_1d();
  for (double t : {0.5, 2.0, 5.0, 12.0})
    for (double r : {1e-4, 0.01, 0.1, 0.5, 0.9})
      EXPECT_NEAR(k.kbar(t, r), eval_kbar(k, t, {0, 0}, {r, 0}), 1e-7) << "t=" << t << " r=" << r;
}

TEST(Kbar, LogarithmicProfile) {
  // |Kbar_t(r) - min(t, log 1/r)| stays bounded uniformly
  const auto& k = kernel_1d();
  double worst = 0.0;
  for (double t : {1.0, 4.0, 10.0, 20.0})
    for (double r : {1e-8, 1e-5, 1e-3, 0.05, 0.3, 0.8})
      worst = std::max(worst, std::abs(k.kbar(t, r) - std::min(t, std::log(1 / r))));
  EXPECT_LT(worst, 2.0);
}

TEST(Kbar, NondecreasingInT) {
  const auto& k = kernel_1d();
  double prev = 0.0;
  for (double t = 0.0; t <= 12.0; t += 0.25) {
    const double v = k.kbar(t, 0.01);
    EXPECT_GE(v, prev - 1e-12);
    prev = v;
  }
}

TEST(KInfinity, StationaryBeyondSupportScale) {
  const auto v = eval_k_infinity(kernel_1d(), {0, 0}, {0.05, 0});
  EXPECT_NEAR(v.value, kernel_1d().kbar(v.t_used + 5.0, 0.05), 1e-9);
}

TEST(PsdFactor, ReproducesSpdMatrix) {
  Eigen::MatrixXd C(3, 3);
  C << 4, 2, 0.6, 2, 2, 0.5, 0.6, 0.5, 1;
  const PsdFactor f = psd_factor(C, "spd");
  EXPECT_EQ(f.jitter, 0.0);
  EXPECT_LT((f.L * f.L.transpose() - C).norm(), 1e-13);
}

TEST(PsdFactor, SingularPsdFallsBack) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(3, 3);
  const PsdFactor f = psd_factor(C, "rank one");
  EXPECT_LT((f.L * f.L.transpose() - C).norm(), 1e-6);
}

TEST(PsdFactor, IndefiniteRaises) {
  Eigen::MatrixXd C(2, 2);
  C << 1, 2, 2, 1;
  EXPECT_THROW(psd_factor(C, "indefinite"), NumericError);
}
