#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gmc/brownian.hpp"
#include "gmc/errors.hpp"

using namespace gmc;

namespace {
PathConfig small(double horizon, double dt = 1e-2, std::size_t n = 20000) {
  PathConfig c;
  c.horizon = horizon;
  c.dt = dt;
  c.replicas = n;
  c.seed = 99;
  return c;
}
}  // namespace

TEST(ClosedForms, KnownValues) {
  EXPECT_NEAR(stay_positive_prob(1.0, 1.0), std::erf(1.0 / std::numbers::sqrt2), 1e-13);
  EXPECT_NEAR(bridge_positive_prob(1.0, 1.0, 2.0), 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(below_line_prob(1.0, 1.0), 1 - std::exp(-2.0), 1e-15);
  EXPECT_EQ(stay_positive_prob(0.0, 1.0), 0.0);
}

TEST(ClosedForms, MonteCarloAgrees) {
  EXPECT_LT(z_score(mc_stay_positive(1.0, 1.0, small(1.0)), stay_positive_prob(1.0, 1.0)), 4.0);
  EXPECT_LT(z_score(mc_bridge_positive(0.5, 1.5, 2.0, small(2.0)), bridge_positive_prob(0.5, 1.5, 2.0)), 4.0);
  EXPECT_LT(z_score(mc_below_line(1.0, 1.0, small(8.0)), below_line_prob(1.0, 1.0)), 4.0);
}

TEST(DoobMcKean, EstimatorsAgree) {
  const DoobMcKeanCheck c = doob_mckean_check(1.0, 1.0, 2.0, small(1.0));
  EXPECT_LT(z_score(c.weighted_brownian, c.bessel), 4.0);
}

TEST(Bessel3, StartsAtAAndStaysPositive) {
  const PathEnsemble e = sample_bessel3(0.5, small(1.0, 0.05, 200));
  EXPECT_EQ(e.paths(0, 0), 0.5);
  EXPECT_GT(e.paths.minCoeff(), 0.0);
}

TEST(ConditionedPositive, NonnegativePaths) {
  const PathEnsemble e = sample_conditioned_positive(0.3, 2.0, small(2.0, 0.01, 500));
  EXPECT_GE(e.paths.minCoeff(), 0.0);
}

TEST(EnvelopeSurvival, ZeroEnvelopeSurvivesSurely) {
  const SurvivalEstimate s = envelope_survival_prob(1.0, ShiftedEnvelope{}, small(10.0, 0.05, 500));
  EXPECT_EQ(s.estimate.value, 1.0);
}

TEST(EtaConstant, LimitsInQAndR) {
  PathConfig c = small(1000.0, 0.01, 5000);
  c.growth = 0.01;
  EXPECT_EQ(eta_constant(2.0, EnvelopeFn::zero(), 0.0, c).estimate.value, 2.0);
  const SurvivalEstimate near = eta_constant(2.0, EnvelopeFn::power(0.3), 0.0, c);
  const SurvivalEstimate far = eta_constant(2.0, EnvelopeFn::power(0.3), 1e6, c);
  EXPECT_LT(near.estimate.value, far.estimate.value);
  EXPECT_GT(far.estimate.value, 1.95);
  EXPECT_THROW(eta_constant(2.0, EnvelopeFn::power(0.5), 0.0, c), ValidationError);
}

TEST(EnvelopeTail, PowerClosedForm) {
  // int_T^inf u^{0.3 - 1.5} du = T^{-0.2} / 0.2
  EXPECT_NEAR(envelope_tail(EnvelopeFn::power(0.3), 100.0), std::pow(100.0, -0.2) / 0.2, 1e-6);
  EXPECT_TRUE(std::isinf(envelope_tail(EnvelopeFn::power(0.5), 100.0)));
}
