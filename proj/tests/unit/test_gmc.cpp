#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "common.hpp"
#include "gmc/diagnostics.hpp"
#include "gmc/errors.hpp"
#include "gmc/gmc.hpp"

using namespace gmc;
using gmc::test::kernel_1d;

namespace {
ReferenceMeasure line(std::vector<double> xs, std::vector<double> ws) {
  ReferenceMeasure mu;
  for (double x : xs) mu.points.push_back({x, 0});
  mu.weights = std::move(ws);
  for (double w : mu.weights) mu.total_mass += w;
  mu.box_lo = {0, 0};
  mu.box_hi = {1, 0};
  return mu;
}
}  // namespace

TEST(Snapshot, HandComputedStatistics) {
  const ReferenceMeasure mu = line({0.2, 0.6}, {0.25, 0.75});
  const double t = 2.0, q = 1.0, rho = 0.3, s2 = std::numbers::sqrt2;
  const std::vector<double> x{1.0, 3.5}, mp{0.2, 1.4}, ms{0.5, 1.6};
  FieldState st;
  st.t = t;
  st.rho_r = rho;
  st.values = x;
  st.max_plain = mp;
  st.max_shifted = ms;
  const std::vector<std::size_t> E{0, 1};
  const GmcSnapshot s = snapshot_statistics(st, mu, E, q);

  const double w0 = std::exp(s2 * x[0] - t), w1 = std::exp(s2 * x[1] - t);
  const double g0 = s2 * t - x[0], g1 = s2 * t - x[1];
  EXPECT_NEAR(s[Statistic::M], 0.25 * w0 + 0.75 * w1, 1e-13);
  EXPECT_NEAR(s[Statistic::D], 0.25 * g0 * w0 + 0.75 * g1 * w1, 1e-13);
  // only atom 0 stays below the barrier
  EXPECT_NEAR(s[Statistic::Mq], 0.25 * w0, 1e-15);
  EXPECT_NEAR(s[Statistic::Mqr], 0.25 * w0, 1e-15);
  EXPECT_NEAR(s[Statistic::Dq], 0.25 * (g0 + q) * w0, 1e-15);
  EXPECT_NEAR(s[Statistic::Dqr], 0.25 * (g0 + q - rho) * w0, 1e-15);
  EXPECT_TRUE(s.q_triggered);
  EXPECT_NEAR(s.scaled(Statistic::M), std::sqrt(std::numbers::pi * t / 2) * s[Statistic::M], 1e-13);
  EXPECT_EQ(s.scaled(Statistic::D), s[Statistic::D]);
}

TEST(Snapshot, EmptySubsetIsExactlyZero) {
  const ReferenceMeasure mu = line({0.2, 0.6}, {0.5, 0.5});
  const std::vector<double> x{1.0, 2.0}, m{0.0, 0.0};
  FieldState st;
  st.t = 1.0;
  st.values = x;
  st.max_plain = m;
  st.max_shifted = m;
  const GmcSnapshot s = snapshot_statistics(st, mu, std::vector<std::size_t>{}, 1.0);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Snapshot, TimeZeroValues) {
  const ReferenceMeasure mu = line({0.2, 0.6}, {0.5, 0.5});
  const std::vector<double> z{0.0, 0.0};
  FieldState st;
  st.values = z;
  st.max_plain = z;
  st.max_shifted = z;
  const GmcSnapshot s = snapshot_statistics(st, mu, all_atoms(mu), 3.0);
  EXPECT_EQ(s[Statistic::M], 1.0);
  EXPECT_EQ(s[Statistic::D], 0.0);
  EXPECT_EQ(s[Statistic::Dq], 3.0);
}

TEST(MollifiedStatistics, WithoutJointOnlyMass) {
  const ReferenceMeasure mu = line({0.2}, {1.0});
  const std::vector<double> x{0.4};
  const GmcSnapshot s = mollified_statistics(x, 3.0, std::exp(-3.0), mu, all_atoms(mu), 1.0);
  EXPECT_NEAR(s[Statistic::M], std::exp(std::numbers::sqrt2 * 0.4 - 3.0), 1e-15);
  EXPECT_FALSE(s.truncated);
  EXPECT_TRUE(std::isnan(s[Statistic::D]));
}

TEST(Ensemble, OrderingAndIdentities) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 32);
  EnsembleSpec spec;
  spec.trunc = {2.0, 1.0, EnvelopeFn::power(0.3)};
  spec.replicas = 200;
  spec.seed = 4;
  const Ensemble e = run_ensemble(kernel_1d(), ScaleGrid({0.0, 1.0, 3.0}, 0.05), mu, spec);
  for (const auto& rep : e[0])
    for (const auto& s : rep) {
      EXPECT_LE(s[Statistic::Mqr], s[Statistic::Mq]);
      EXPECT_LE(s[Statistic::Mq], s[Statistic::M]);
      EXPECT_GE(s[Statistic::Dqr], 0.0);
      if (!s.q_triggered) EXPECT_NEAR(s[Statistic::Dq], s[Statistic::D] + 2.0 * s[Statistic::M], 1e-10);
    }
  const auto rows = ensemble_moments(e[0], std::vector<Statistic>{Statistic::M});
  for (const auto& r : rows) EXPECT_LT(z_score(r.mean, 1.0), 4.0);
}

TEST(Ensemble, MomentsNeedHundredReplicas) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 8);
  EnsembleSpec spec;
  spec.replicas = 20;
  const Ensemble e = run_ensemble(kernel_1d(), ScaleGrid({0.0, 1.0}, 0.1), mu, spec);
  EXPECT_THROW(ensemble_moments(e[0], std::vector<Statistic>{Statistic::M}), ValidationError);
}

TEST(StoredPath, ShiftMismatchRejected) {
  const ReferenceMeasure mu = line({0.3}, {1.0});
  const FieldPath p = sample_scale_path(kernel_1d(), ScaleGrid({0.0, 1.0}, 0.05), mu.points, ShiftedEnvelope{}, 1);
  const TruncationParams tp{1.0, 2.0, EnvelopeFn::power(0.3)};
  EXPECT_THROW(snapshot_statistics(p, mu, all_atoms(mu), tp, 1.0), UsageError);
}

TEST(ScaledEnvelope, MultipliesValues) {
  const EnvelopeFn f = scaled_envelope(EnvelopeFn::power(0.5, 1.0, 1.0), 0.5);
  EXPECT_NEAR(f(3.0), 0.5, 1e-14);
}

TEST(Degeneracy, RejectsConvergentSchedule) {
  DegeneracyConfig c;
  c.cantor = {EnvelopeFn::power(0.3, 0.5), 6};
  c.contrast = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 64);
  c.contrast_rho = EnvelopeFn::power(0.3);
  EXPECT_THROW(degeneracy_diagnostic(kernel_1d(), ScaleGrid({0.0, 2.0}, 0.1), c), ValidationError);
}
