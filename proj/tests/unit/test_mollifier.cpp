#include <cmath>

#include <gtest/gtest.h>

#include "common.hpp"
#include "gmc/mollifier.hpp"

using namespace gmc;
using gmc::test::kernel_1d;

TEST(Mollifier, UnitMassAndSupport) {
  for (BumpFamily b : {BumpFamily::Exp, BumpFamily::FlatExp}) {
    const Mollifier m(b, 1, 0.1);
    EXPECT_LT(m.mass_error(), 1e-8);
    EXPECT_EQ(m.theta(1.0), 0.0);
    EXPECT_EQ(m.phi(2.0), 0.0);
    EXPECT_NEAR(m.theta_eps(0.05), 10.0 * m.theta(0.5), 1e-12);
    EXPECT_NEAR(m.t_eps(), std::log(10.0), 1e-15);
  }
}

TEST(Mollifier, PhiIntegratesToOne) {
  const Mollifier m(BumpFamily::Exp, 1, 0.5);
  double s = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) s += 2 * m.phi((i + 0.5) * 2.0 / n) * 2.0 / n;
  EXPECT_NEAR(s, 1.0, 1e-5);
}

TEST(MollifiedCov, LogarithmicBound) {
  const Mollifier m(BumpFamily::Exp, 1, std::exp(-4.0));
  const auto rep = check_log_bound(kernel_1d(), m, {0.0, 1e-3, 0.02, 0.2, 0.7}, {1.0, 3.0, 6.0});
  EXPECT_LT(rep.kbar, 2.0);
  EXPECT_LT(rep.kt_eps, 3.0);
  EXPECT_LT(rep.kbar_cross, 3.0);
  EXPECT_GT(rep.probes, 0u);
}

TEST(MollifiedCov, FullCovarianceGrowsLikeLogInverseEps) {
  const Mollifier a(BumpFamily::Exp, 1, std::exp(-3.0)), b(BumpFamily::Exp, 1, std::exp(-5.0));
  const double va = eval_mollified_cov(kernel_1d(), a, std::nullopt, {0, 0}, {0, 0});
  const double vb = eval_mollified_cov(kernel_1d(), b, std::nullopt, {0, 0}, {0, 0});
  EXPECT_NEAR(vb - va, 2.0, 0.05);
}
