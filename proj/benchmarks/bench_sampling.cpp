#include <benchmark/benchmark.h>

#include "gmc/brownian.hpp"
#include "gmc/field.hpp"
#include "gmc/gmc.hpp"

using namespace gmc;

namespace {
const StarScaleKernel& kernel() {
  static const StarScaleKernel k(0.5, 1.0, build_smoothing_kernel(BumpFamily::Exp, 1));
  return k;
}
}  // namespace

// Sampler throughput: range(0) atoms, 64 replicas up to t = 4.
static void BM_ScaleSampler(benchmark::State& state) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / static_cast<double>(state.range(0)));
  const ScaleFieldSampler s(kernel(), ScaleGrid({0.0, 4.0}, 0.05), mu.points);
  double acc = 0.0;
  for (auto _ : state)
    s.run(1, 0, 64, [&](std::size_t, const FieldState& st) { acc += st.values[0]; });
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ScaleSampler)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SnapshotStatistics(benchmark::State& state) {
  const ReferenceMeasure mu = build_lebesgue(Box{1, {0, 0}, {1, 0}}, 1.0 / 256);
  const FieldPath p = sample_scale_path(kernel(), ScaleGrid({0.0, 0.5}, 0.05), mu.points, ShiftedEnvelope{}, 3);
  const auto E = all_atoms(mu);
  const FieldState st = p.state(1);
  for (auto _ : state) benchmark::DoNotOptimize(snapshot_statistics(st, mu, E, 1.0).values);
}
BENCHMARK(BM_SnapshotStatistics);

static void BM_BesselPaths(benchmark::State& state) {
  PathConfig c;
  c.horizon = 1.0;
  c.dt = 1e-3;
  c.replicas = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(sample_bessel3(1.0, c).paths.data());
}
BENCHMARK(BM_BesselPaths)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
