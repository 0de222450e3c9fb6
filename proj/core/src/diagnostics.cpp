#include "gmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gmc/errors.hpp"

namespace gmc {

ConvergenceReport convergence_diagnostic(const std::vector<std::vector<GmcSnapshot>>& snapshots) {
  if (snapshots.size() < 100) throw ValidationError("convergence diagnostic needs at least 100 replicas");
  ConvergenceReport rep;
  const std::size_t ncp = snapshots.front().size();
  for (std::size_t j = 0; j < ncp; ++j) {
    const double t = snapshots.front()[j].t;
    if (t <= 0.0) continue;
    const std::vector<double> dqr = column(snapshots, j, Statistic::Dqr);
    const std::vector<double> mqr = column(snapshots, j, Statistic::Mqr, true);
    const std::vector<double> m = column(snapshots, j, Statistic::M, true);
    std::vector<double> diff(dqr.size()), sq(dqr.size());
    for (std::size_t i = 0; i < dqr.size(); ++i) {
      diff[i] = std::abs(dqr[i] - mqr[i]);
      const double raw = snapshots[i][j][Statistic::Mqr];
      sq[i] = t * raw * raw;
    }
    ConvergenceRow row;
    row.t = t;
    row.mean_abs_diff = mc_mean(diff);
    row.correlation = sample_correlation(dqr, mqr);
    row.t_second_moment = mc_mean(sq);
    row.mean_dqr = mc_mean(dqr);
    row.mean_scaled_mqr = mc_mean(mqr);
    row.mean_scaled_m = mc_mean(m);
    row.median_scaled_m = quantile(m, 0.5);
    rep.rows.push_back(row);
  }
  rep.correlation_increasing = !rep.rows.empty();
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].correlation.value > rep.rows[i - 1].correlation.value)) rep.correlation_increasing = false;
  if (!rep.rows.empty()) {
    double mx = 0.0;
    for (const auto& r : rep.rows) mx = std::max(mx, r.t_second_moment.value);
    rep.second_moment_ratio = mx / rep.rows.front().t_second_moment.value;
  }
  return rep;
}

EnvelopeFn scaled_envelope(const EnvelopeFn& f, double c) {
  switch (f.kind()) {
    case EnvelopeKind::Power: return EnvelopeFn::power(f.exponent(), c * f.scale(), f.offset());
    case EnvelopeKind::SqrtLog: return EnvelopeFn::sqrt_log(f.exponent(), f.sign(), c * f.scale());
    case EnvelopeKind::Table: {
      std::vector<double> rho = f.table_rho();
      for (double& v : rho) v *= c;
      auto tail = f.tail();
      if (tail) tail->coefficient *= c;
      return EnvelopeFn::table(f.table_u(), rho, tail);
    }
  }
  throw UsageError("unknown envelope kind");
}

namespace {

struct MeasureTrack {
  std::vector<DegeneracyRow> rows;
  std::vector<SupFieldRow> sup;
  double sup_median = 0.0;
};

MeasureTrack track(const StarScaleKernel& k, const ScaleGrid& grid, const ReferenceMeasure& mu,
                   const EnvelopeFn& theta, const DegeneracyConfig& cfg) {
  const double a = std::sqrt(2.0);
  const std::size_t ncp = grid.checkpoints().size();
  const std::vector<std::size_t> all = all_atoms(mu);

  // Cantor times on the sub-step lattice, one per n while t_n fits the grid.
  std::vector<SupFieldRow> sup;
  std::vector<std::size_t> sup_step;
  for (int n = 0;; ++n) {
    const double tn = n * std::numbers::ln2 + theta(n);
    const auto step = static_cast<std::size_t>(std::llround(tn / grid.dt()));
    if (step > grid.substeps()) break;
    SupFieldRow row;
    row.n = n;
    row.t_n = tn;
    row.t_used = grid.time(step);
    sup.push_back(row);
    sup_step.push_back(step);
  }

  std::vector<std::vector<double>> scaled_m(ncp, std::vector<double>(cfg.replicas));
  std::vector<std::vector<double>> dvals(ncp, std::vector<double>(cfg.replicas));
  std::vector<std::vector<double>> sup_vals(sup.size(), std::vector<double>(cfg.replicas));

  ScaleFieldSampler sampler(k, grid, mu.points);
  SamplerOptions opts = cfg.options;
  opts.every_step = !sup.empty();
  sampler.run(cfg.seed, 0, cfg.replicas, [&](std::size_t rep, const FieldState& st) {
    if (st.checkpoint != kNotCheckpoint) {
      const GmcSnapshot s = snapshot_statistics(st, mu, all, cfg.q);
      scaled_m[st.checkpoint][rep] = s.scaled(Statistic::M);
      dvals[st.checkpoint][rep] = s[Statistic::D];
    }
    for (std::size_t i = 0; i < sup.size(); ++i) {
      if (sup_step[i] != st.step) continue;
      const double shift = -a * st.t + cfg.alpha * theta(sup[i].n) / a;
      double mx = -std::numeric_limits<double>::infinity();
      for (double x : st.values) mx = std::max(mx, x);
      sup_vals[i][rep] = mx + shift;
    }
  }, opts);

  MeasureTrack out;
  for (std::size_t j = 0; j < ncp; ++j) {
    DegeneracyRow row;
    row.t = grid.checkpoints()[j];
    row.median_scaled_m = quantile(scaled_m[j], 0.5);
    row.upper_quartile_scaled_m = quantile(scaled_m[j], 0.75);
    row.median_d = quantile(dvals[j], 0.5);
    row.upper_quartile_d = quantile(dvals[j], 0.75);
    out.rows.push_back(row);
  }
  std::vector<double> sup_over_n(cfg.replicas, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < sup.size(); ++i) {
    sup[i].median = quantile(sup_vals[i], 0.5);
    sup[i].upper_quartile = quantile(sup_vals[i], 0.75);
    for (std::size_t r = 0; r < cfg.replicas; ++r) sup_over_n[r] = std::max(sup_over_n[r], sup_vals[i][r]);
  }
  out.sup = std::move(sup);
  if (!out.sup.empty()) out.sup_median = quantile(sup_over_n, 0.5);
  return out;
}

}  // namespace

DegeneracyReport degeneracy_diagnostic(const StarScaleKernel& k, const ScaleGrid& grid, const DegeneracyConfig& cfg) {
  if (k.dimension() != 1 || cfg.contrast.d != 1) throw ValidationError("degeneracy diagnostic: the Cantor comparison is one-dimensional");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("degeneracy diagnostic: alpha must lie in (0, 1)");
  if (cfg.replicas < 100) throw ValidationError("degeneracy diagnostic needs at least 100 replicas");
  const EnvelopeFn& theta = cfg.cantor.schedule;
  const EnvelopeFn rho_bar = scaled_envelope(theta, 0.5);
  if (dvoretzky_erdos_test(rho_bar).classification != DeClass::Diverges)
    throw ValidationError("degeneracy diagnostic: the Cantor schedule induces a convergent envelope ("
                          + rho_bar.describe() + ")");
  if (dvoretzky_erdos_test(cfg.contrast_rho).classification != DeClass::Converges)
    throw ValidationError("degeneracy diagnostic: the contrast envelope " + cfg.contrast_rho.describe()
                          + " fails the Dvoretzky-Erdos test");

  const ReferenceMeasure cantor = build_cantor(cfg.cantor);
  DegeneracyReport rep;
  MeasureTrack c = track(k, grid, cantor, theta, cfg);
  MeasureTrack l = track(k, grid, cfg.contrast, theta, cfg);
  rep.cantor = std::move(c.rows);
  rep.cantor_sup = std::move(c.sup);
  rep.cantor_sup_median = c.sup_median;
  rep.contrast = std::move(l.rows);
  rep.contrast_sup = std::move(l.sup);
  rep.contrast_sup_median = l.sup_median;

  for (double t : grid.checkpoints()) {
    if (t <= 0.0) continue;
    PathConfig pc = cfg.bound_paths;
    pc.horizon = t;
    DecayBoundRow row;
    row.t = t;
    row.bound = envelope_survival_prob(cfg.q, ShiftedEnvelope{rho_bar, 0.0}, pc);
    row.bound.estimate.value *= cfg.q;
    row.bound.estimate.se *= cfg.q;
    rep.decay_bound.push_back(row);
  }
  return rep;
}

}  // namespace gmc
