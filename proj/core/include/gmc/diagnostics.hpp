#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gmc/brownian.hpp"
#include "gmc/gmc.hpp"

namespace gmc {

struct ConvergenceRow {
  double t = 0.0;
  McEstimate mean_abs_diff;    // E|D^(q,r)_t - sqrt(pi t/2) M^(q,r)_t|
  McEstimate correlation;      // across replicas, jackknife SE
  McEstimate t_second_moment;  // t E[(M^(q,r)_t)^2]
  McEstimate mean_dqr;
  McEstimate mean_scaled_mqr;
  McEstimate mean_scaled_m;    // sqrt(pi t/2) E[M_t]
  double median_scaled_m = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // checkpoints with t > 0
  bool correlation_increasing = false;
  double second_moment_ratio = 0.0;  // max_t over the first row's value
};

// snapshots[replica][checkpoint] from run_ensemble.
ConvergenceReport convergence_diagnostic(const std::vector<std::vector<GmcSnapshot>>& snapshots);

struct DegeneracyConfig {
  CantorSpec cantor;            // schedule theta with a divergent test integral
  ReferenceMeasure contrast;    // e.g. Lebesgue on [0, 1]
  EnvelopeFn contrast_rho = EnvelopeFn::zero();  // must pass the Dvoretzky-Erdos test
  double alpha = 0.5;           // sup-field parameter, in (0, 1)
  double q = 1.0;               // barrier of the decay bound
  std::size_t replicas = 500;
  std::uint64_t seed = 0;
  SamplerOptions options;
  PathConfig bound_paths;       // Bessel paths for the decay bound (horizon ignored)
};

struct DegeneracyRow {
  double t = 0.0;
  double median_scaled_m = 0.0, upper_quartile_scaled_m = 0.0;
  double median_d = 0.0, upper_quartile_d = 0.0;
};

// max_x (Xbar_{t_n}(x) - sqrt(2) t_n + alpha theta(n) / sqrt(2)) at the Cantor
// times t_n = n log 2 + theta(n), read off the nearest sub-step.
struct SupFieldRow {
  int n = 0;
  double t_n = 0.0;
  double t_used = 0.0;
  double median = 0.0, upper_quartile = 0.0;
};

struct DecayBoundRow {
  double t = 0.0;
  SurvivalEstimate bound;  // q Q_q[beta_s >= theta(s)/2 for s <= t]
};

struct DegeneracyReport {
  std::vector<DegeneracyRow> cantor, contrast;
  std::vector<SupFieldRow> cantor_sup, contrast_sup;
  double cantor_sup_median = 0.0;    // median over replicas of the sup over n
  double contrast_sup_median = 0.0;
  std::vector<DecayBoundRow> decay_bound;
};

// Validates the inputs (ValidationError when the Cantor schedule's induced
// envelope converges or the contrast envelope diverges), then samples both
// measures on the same grid.
DegeneracyReport degeneracy_diagnostic(const StarScaleKernel& k, const ScaleGrid& grid, const DegeneracyConfig& cfg);

// c * f for the analytic kinds and tables.
EnvelopeFn scaled_envelope(const EnvelopeFn& f, double c);

}  // namespace gmc
