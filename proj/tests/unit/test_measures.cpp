#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "gmc/errors.hpp"
#include "gmc/measures.hpp"

using namespace gmc;

namespace {
ReferenceMeasure two_atoms(double x0, double x1, double w) {
  ReferenceMeasure mu;
  mu.points = {{x0, 0}, {x1, 0}};
  mu.weights = {w, w};
  mu.total_mass = 2 * w;
  return mu;
}
CantorSpec sqrt_schedule(int level) { return {EnvelopeFn::power(0.5, 1.0, 1.0), level}; }
}  // namespace

TEST(Capacity, SingleAtomIsZero) {
  ReferenceMeasure mu;
  mu.points = {{0.3, 0}};
  mu.weights = {1.0};
  mu.total_mass = 1.0;
  EXPECT_EQ(capacity_integral(mu, EnvelopeFn::power(0.3)), 0.0);
}

TEST(Capacity, TwoAtomsAtUnitDistance) {
  EXPECT_DOUBLE_EQ(capacity_integral(two_atoms(0.0, 1.0, 0.7), EnvelopeFn::power(0.3)), 2 * 0.49);
}

TEST(Capacity, CoincidentAtomsRejected) {
  EXPECT_THROW(capacity_integral(two_atoms(0.5, 0.5, 1.0), EnvelopeFn::power(0.3)), ValidationError);
}

TEST(Capacity, TranslationInvariant) {
  const ReferenceMeasure a = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 64);
  ReferenceMeasure b = a;
  for (auto& p : b.points) p[0] += 3.25;
  EXPECT_NEAR(capacity_integral(a, EnvelopeFn::power(0.3)), capacity_integral(b, EnvelopeFn::power(0.3)), 1e-9);
}

TEST(Capacity, LebesgueRefinementAddsContinuumTail) {
  // The lattice sum over |x-y| = kh behaves like the continuum integral cut at
  // h e^{-gamma} (sum 1/k ~ log N + gamma), so halving h adds the band
  // u in [log 1/h + gamma, log 2/h + gamma] of 2 int e^{-u^0.3} du.
  const EnvelopeFn rho = EnvelopeFn::power(0.3);
  const double c1 = capacity_integral(build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 1024), rho);
  const double c2 = capacity_integral(build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 2048), rho);
  const double u0 = 10 * std::log(2.0) + std::numbers::egamma, du = std::log(2.0) / 1000;
  double band = 0.0;
  for (int i = 0; i < 1000; ++i) band += 2 * std::exp(-std::pow(u0 + (i + 0.5) * du, 0.3)) * du;
  EXPECT_NEAR((c2 - c1) / band, 1.0, 0.02);
}

TEST(Lebesgue, ExactMassAndAtomCount) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 256);
  EXPECT_EQ(mu.size(), 256u);
  EXPECT_EQ(mu.total_mass, 1.0);
  const ReferenceMeasure sq = build_lebesgue(Box{2, {0, 0}, {2, 1}}, 0.125);
  EXPECT_EQ(sq.size(), 128u);
  EXPECT_EQ(sq.total_mass, 2.0);
}

TEST(Lebesgue, AtomCapEnforced) {
  EXPECT_THROW(build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 8192), ResourceError);
}

TEST(Cantor, DiametersFollowSchedule) {
  const CantorSpec s = sqrt_schedule(8);
  const auto d = cantor_diameters(s);
  ASSERT_EQ(d.size(), 9u);
  for (int k = 0; k <= 8; ++k) EXPECT_NEAR(d[k], std::ldexp(1.0, -k) * std::exp(-s.schedule(k)), 1e-15);
  const auto a = cantor_gaps(s);
  for (int k = 1; k <= 8; ++k) EXPECT_NEAR(a[k - 1], 1 - std::exp(-(s.schedule(k) - s.schedule(k - 1))), 1e-15);
}

TEST(Cantor, UnitMassAndAtoms) {
  const ReferenceMeasure mu = build_cantor(sqrt_schedule(10));
  EXPECT_EQ(mu.size(), 1024u);
  EXPECT_NEAR(mu.total_mass, 1.0, 1e-15);
  for (const auto& p : mu.points) {
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 1.0);
  }
}

TEST(Cantor, GapFractionOutOfRangeRejected) {
  EXPECT_THROW(build_cantor({EnvelopeFn::power(0.5), 4}), ValidationError);
}

TEST(CantorBounds, BracketContainsAtomizedIntegral) {
  const CantorSpec s = sqrt_schedule(10);
  const double alpha = 1.5;
  const CapacityBracket b = cantor_capacity_bounds(s, alpha, s.level);
  const double c = capacity_integral(build_cantor(s), EnvelopeFn::power(0.5, alpha, 1.0));
  EXPECT_LE(b.lower, c);
  EXPECT_GE(b.upper, c);
}

TEST(CantorBounds, ConvergesAboveThresholdDivergesAtZero) {
  const CantorSpec s = sqrt_schedule(10);
  EXPECT_TRUE(cantor_capacity_bounds(s, 1.5, 10).converged);
  EXPECT_FALSE(cantor_capacity_bounds(s, 0.0, 10).converged);
  EXPECT_TRUE(cantor_capacity_bounds(s, 1.5, 10).regular_variation_family);
}

TEST(RegularPart, ThresholdBehaviour) {
  const ReferenceMeasure mu = build_cantor(sqrt_schedule(8));
  const EnvelopeFn rho = EnvelopeFn::power(0.3);
  EXPECT_EQ(restrict_to_regular_part(mu, rho).size(), mu.size());
  double prev = -1.0;
  const auto pot = local_potentials(mu, rho);
  const double lo = *std::min_element(pot.begin(), pot.end()), hi = *std::max_element(pot.begin(), pot.end());
  for (int i = 0; i <= 4; ++i) {
    const double m = restrict_to_regular_part(mu, rho, lo + (hi - lo) * i / 4.0).total_mass;
    EXPECT_GE(m, prev);
    prev = m;
  }
}

TEST(Occupation, MassIsHorizon) {
  const ReferenceMeasure mu = build_occupation(1.0, 1.0 / 256, 9, 2);
  EXPECT_NEAR(mu.total_mass, 1.0, 1e-12);
  std::ostringstream os;
  write_atoms_csv(mu, os);
  EXPECT_NE(os.str().find('\n'), std::string::npos);
}
