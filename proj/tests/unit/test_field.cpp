#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "common.hpp"
#include "gmc/errors.hpp"
#include "gmc/field.hpp"
#include "gmc/statistics.hpp"

using namespace gmc;
using gmc::test::kernel_1d;

TEST(IncrementCovariance, DiagonalExactAndMatchesKbar) {
  const std::vector<Point> sites{{0.1, 0}, {0.15, 0}, {0.6, 0}};
  const Eigen::MatrixXd C = increment_covariance(kernel_1d(), 1.0, 3.0, sites);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(C(i, i), 2.0);
  EXPECT_NEAR(C(0, 1), kernel_1d().kbar(3.0, 0.05) - kernel_1d().kbar(1.0, 0.05), 1e-12);
  EXPECT_NEAR(C(0, 1), C(1, 0), 0.0);
}

TEST(ScaleGrid, CheckpointsOnLattice) {
  const ScaleGrid g({0.0, 1.0, 2.5}, 0.05);
  EXPECT_EQ(g.checkpoint_steps(), (std::vector<std::size_t>{0, 20, 50}));
  EXPECT_NEAR(g.horizon(), 2.5, 1e-12);
  EXPECT_THROW(ScaleGrid({1.0, 0.5}, 0.05), ValidationError);
}

TEST(ScaleFieldSampler, ResultsIndependentOfChunkingAndThreads) {
  const std::vector<Point> sites{{0.1, 0}, {0.12, 0}, {0.5, 0}};
  const ScaleFieldSampler s(kernel_1d(), ScaleGrid({0.0, 1.0, 2.0}, 0.1), sites);
  SamplerOptions a, b;
  a.chunk = 1;
  b.chunk = 7;
  b.threads = 2;
  const auto pa = s.sample_paths(5, 20, false, a);
  const auto pb = s.sample_paths(5, 20, false, b);
  for (std::size_t r = 0; r < pa.size(); ++r) EXPECT_EQ(pa[r].checkpoint_values, pb[r].checkpoint_values);
}

TEST(ScaleFieldSampler, EmpiricalCovarianceMatchesKbar) {
  const std::vector<Point> sites{{0.2, 0}, {0.3, 0}, {0.7, 0}};
  const ScaleFieldSampler s(kernel_1d(), ScaleGrid({0.0, 1.0, 3.0}, 0.05), sites);
  const auto paths = s.sample_paths(17, 4000, false);
  const std::vector<CovProbe> probes{{0, 0, 3.0, 3.0}, {0, 1, 3.0, 3.0}, {0, 2, 3.0, 3.0}, {0, 1, 1.0, 3.0}};
  const auto cov = empirical_covariance(paths, probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const double exact = eval_kbar(kernel_1d(), probes[p].time_a, sites[probes[p].site_a], sites[probes[p].site_b]);
    EXPECT_LT(std::abs(cov[p].value - exact), 4 * cov[p].se) << "probe " << p;
  }
}

TEST(ScaleFieldSampler, RunningMaximaAreConsistent) {
  const FieldPath p = sample_scale_path(kernel_1d(), ScaleGrid({0.0, 2.0}, 0.05), {{0.4, 0}},
                                        ShiftedEnvelope{EnvelopeFn::power(0.3), 1.0}, 3);
  const auto j = p.checkpoint_index(2.0);
  const double rho = std::pow(3.0, 0.3) - 1.0;
  EXPECT_NEAR(p.checkpoint_rho[j], rho, 1e-12);
  EXPECT_GE(p.max_plain[j][0], p.checkpoint_values[j][0] - std::sqrt(2.0) * 2.0 - 1e-12);
  EXPECT_GE(p.max_shifted[j][0], p.max_plain[j][0]);
  EXPECT_THROW(p.checkpoint_index(1.0), UsageError);
}

TEST(MollifiedField, VarianceMatchesCovariance) {
  const Mollifier m(BumpFamily::Exp, 1, std::exp(-2.0));
  const Eigen::MatrixXd x = sample_mollified_field(kernel_1d(), m, {{0.3, 0}}, 8, 20000);
  std::vector<double> col(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, 0);
  const McEstimate v = sample_variance(col);
  EXPECT_LT(std::abs(v.value - mollified_variance(kernel_1d(), m)), 4 * v.se);
}

TEST(JointMollifiedSampler, HorizonBelowTEpsRejected) {
  const Mollifier m(BumpFamily::Exp, 1, std::exp(-3.0));
  EXPECT_THROW(JointMollifiedSampler(kernel_1d(), m, ScaleGrid({0.0, 1.0}, 0.05), {{0.1, 0}}), UsageError);
}

TEST(EmpiricalCovariance, NeedsEnoughSamples) {
  const std::vector<double> a(50, 1.0);
  EXPECT_THROW(empirical_covariance(a, a), ValidationError);
}
