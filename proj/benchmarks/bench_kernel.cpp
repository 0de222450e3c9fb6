#include <benchmark/benchmark.h>

#include "gmc/factor.hpp"
#include "gmc/field.hpp"
#include "gmc/kernel.hpp"
#include "gmc/measures.hpp"

using namespace gmc;

namespace {
const StarScaleKernel& kernel() {
  static const StarScaleKernel k(0.5, 1.0, build_smoothing_kernel(BumpFamily::Exp, 1));
  return k;
}
}  // namespace

static void BM_KbarTable(benchmark::State& state) {
  const auto& k = kernel();
  double r = 1e-3, acc = 0.0;
  for (auto _ : state) {
    acc += k.kbar(5.0, r);
    r = r < 0.9 ? r * 1.01 : 1e-3;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_KbarTable);

static void BM_KbarQuadrature(benchmark::State& state) {
  const auto& k = kernel();
  for (auto _ : state) benchmark::DoNotOptimize(eval_kbar(k, 5.0, {0, 0}, {0.01, 0}));
}
BENCHMARK(BM_KbarQuadrature);

// Covariance of one early sub-step (dense) and its factorization.
static void BM_IncrementFactor(benchmark::State& state) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    const Eigen::MatrixXd C = increment_covariance(kernel(), 0.0, 0.05, mu.points);
    benchmark::DoNotOptimize(psd_factor(C, "bench").L.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IncrementFactor)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond)->Complexity();

static void BM_CapacityIntegral(benchmark::State& state) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / static_cast<double>(state.range(0)));
  const EnvelopeFn rho = EnvelopeFn::power(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(capacity_integral(mu, rho));
}
BENCHMARK(BM_CapacityIntegral)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
