#include <cmath>

#include <gtest/gtest.h>

#include "gmc/envelope.hpp"
#include "gmc/errors.hpp"

using namespace gmc;

TEST(EnvelopeFn, PowerValues) {
  const EnvelopeFn f = EnvelopeFn::power(0.3);
  EXPECT_EQ(f(0.0), 0.0);
  EXPECT_NEAR(f(10.0), std::pow(10.0, 0.3), 1e-14);
  const EnvelopeFn g = EnvelopeFn::power(0.5, 2.0, 1.0);
  EXPECT_NEAR(g(3.0), 2.0 * (2.0 - 1.0), 1e-14);
  EXPECT_TRUE(f.concave());
  EXPECT_TRUE(f.monotone());
}

TEST(EnvelopeFn, SqrtLogValues) {
  const EnvelopeFn f = EnvelopeFn::sqrt_log(2.0, -1);
  EXPECT_NEAR(f(7.0), std::sqrt(7.0) * std::pow(std::log(9.0), -2.0), 1e-14);
  EXPECT_EQ(f(0.0), 0.0);
}

TEST(EnvelopeFn, NegativeArgumentRejected) { EXPECT_THROW(eval_rho(EnvelopeFn::power(0.3), -1.0), DomainError); }

TEST(EnvelopeFn, TableInterpolatesAndRejectsBadInput) {
  const EnvelopeFn t = EnvelopeFn::table({0, 1, 4}, {0, 1, 2});
  EXPECT_DOUBLE_EQ(t(2.5), 1.5);
  EXPECT_THROW(eval_rho(t, 5.0), RangeError);
  EXPECT_THROW(EnvelopeFn::table({0, 1, 2}, {0, 2, 1}), ValidationError);
  EXPECT_THROW(EnvelopeFn::table({0, 1}, {1, 2}), ValidationError);
}

TEST(ShiftedGap, DefinitionAndDecay) {
  const EnvelopeFn f = EnvelopeFn::power(0.3);
  EXPECT_NEAR(shifted_gap(f, 2.0, 3.0), std::pow(5.0, 0.3) - std::pow(2.0, 0.3), 1e-14);
  EXPECT_EQ(shifted_gap(f, 5.0, 0.0), 0.0);
  double prev = 1e300;
  for (double r : {0.0, 1.0, 10.0, 100.0, 1e4}) {
    const double g = shifted_gap(f, r, 10.0);
    EXPECT_LE(g, prev);
    prev = g;
  }
  EXPECT_THROW(shifted_gap(f, -1.0, 1.0), DomainError);
}

TEST(DvoretzkyErdos, ExampleClassifications) {
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::power(0.1)).classification, DeClass::Converges);
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::power(0.49)).classification, DeClass::Converges);
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::power(0.5)).classification, DeClass::Diverges);
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::sqrt_log(1.5, -1)).classification, DeClass::Converges);
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::sqrt_log(1.0, -1)).classification, DeClass::Diverges);
  EXPECT_EQ(dvoretzky_erdos_test(EnvelopeFn::sqrt_log(0.5, 1)).classification, DeClass::Diverges);
}

TEST(DvoretzkyErdos, PowerBoundMatchesClosedForm) {
  // int_1^inf u^{g - 3/2} du = 1 / (1/2 - g)
  const DeResult r = dvoretzky_erdos_test(EnvelopeFn::power(0.3));
  EXPECT_NEAR(r.bound, 1.0 / 0.2, 1e-6);
}

TEST(ConcaveMajorant, UpperHullOfSamples) {
  const EnvelopeFn t = EnvelopeFn::table({0, 1, 2, 3}, {0, 0.5, 2, 2.5});
  const EnvelopeFn m = concave_majorant(t);
  EXPECT_TRUE(m.concave());
  for (double u : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) EXPECT_GE(m(u), t(u) - 1e-14);
  EXPECT_NEAR(m(1.0), 1.0, 1e-14);  // chord from (0,0) to (2,2)
}
