#include "gmc/gmc.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gmc/errors.hpp"

namespace gmc {

void TruncationParams::validate() const {
  if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("truncation: q must be finite and >= 0");
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("truncation: r must be finite and >= 0");
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::M: return "M";
    case Statistic::D: return "D";
    case Statistic::Mq: return "Mq";
    case Statistic::Mqr: return "Mqr";
    case Statistic::Dq: return "Dq";
    case Statistic::Dqr: return "Dqr";
  }
  return "?";
}

Statistic statistic_from_string(const std::string& name) {
  for (Statistic s : kStatistics)
    if (to_string(s) == name) return s;
  throw ValidationError("unknown statistic '" + name + "' (expected M, D, Mq, Mqr, Dq or Dqr)");
}

namespace {

void check_subset(const ReferenceMeasure& mu, std::span<const std::size_t> E, std::size_t sites) {
  if (sites != mu.size()) throw UsageError("field sites do not match the atoms of the measure");
  for (std::size_t i : E)
    if (i >= mu.size()) throw UsageError("subset index out of range");
}

}  // namespace

GmcSnapshot snapshot_statistics(const FieldState& state, const ReferenceMeasure& mu, std::span<const std::size_t> E,
                                double q, bool keep_atoms) {
  check_subset(mu, E, state.values.size());
  const double a = std::sqrt(2.0 * mu.d);
  const double t = state.t;
  const double d = mu.d;
  GmcSnapshot s;
  s.t = t;
  s.scale = std::sqrt(std::numbers::pi * t / 2.0);
  double M = 0, D = 0, Mq = 0, Mqr = 0, Dq = 0, Dqr = 0;
  if (keep_atoms) s.atom_weights.reserve(E.size());
  for (std::size_t i : E) {
    const double w = mu.weights[i];
    const double x = state.values[i];
    const double W = std::exp(a * x - d * t);
    const double gap = a * t - x;
    M += w * W;
    D += w * gap * W;
    if (state.max_plain[i] < q) {
      Mq += w * W;
      Dq += w * (gap + q) * W;
    } else {
      s.q_triggered = true;
    }
    if (state.max_shifted[i] < q) {
      Mqr += w * W;
      Dqr += w * (gap + q - state.rho_r) * W;
    }
    if (keep_atoms) s.atom_weights.push_back(W);
  }
  s.values = {M, D, Mq, Mqr, Dq, Dqr};
  return s;
}

GmcSnapshot snapshot_statistics(const FieldPath& path, const ReferenceMeasure& mu, std::span<const std::size_t> E,
                                const TruncationParams& p, double t, bool keep_atoms) {
  p.validate();
  const std::size_t j = path.checkpoint_index(t);
  const double expected = p.shift()(path.checkpoint_times[j]);
  if (std::abs(expected - path.checkpoint_rho[j]) > 1e-12 * (1.0 + std::abs(expected)))
    throw UsageError("path was sampled with a different envelope shift than the truncation parameters");
  return snapshot_statistics(path.state(j), mu, E, p.q, keep_atoms);
}

GmcSnapshot mollified_statistics(std::span<const double> x_eps, double k_eps_diag, double eps,
                                 const ReferenceMeasure& mu, std::span<const std::size_t> E, double q,
                                 const FieldState* joint) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mollified statistics: eps must lie in (0, 1)");
  check_subset(mu, E, x_eps.size());
  const double t_eps = -std::log(eps);
  GmcSnapshot s;
  if (joint) {
    if (joint->t + 1e-9 < t_eps) {
      std::ostringstream os;
      os << "joint path state at t = " << joint->t << " is below t_eps = " << t_eps;
      throw UsageError(os.str());
    }
    if (joint->t > t_eps + 1e-9) throw UsageError("joint path state must be taken at t_eps");
    s = snapshot_statistics(*joint, mu, E, q);
  } else {
    s.truncated = false;
    s.values.fill(std::numeric_limits<double>::quiet_NaN());
  }
  s.t = t_eps;
  s.eps = eps;
  s.mollified = true;
  s.scale = std::sqrt(std::numbers::pi * t_eps / 2.0);
  const double a = std::sqrt(2.0 * mu.d);
  double M = 0, Mq = 0, Mqr = 0;
  for (std::size_t i : E) {
    const double W = mu.weights[i] * std::exp(a * x_eps[i] - mu.d * k_eps_diag);
    M += W;
    if (joint) {
      if (joint->max_plain[i] < q) Mq += W;
      if (joint->max_shifted[i] < q) Mqr += W;
    }
  }
  s.values[static_cast<std::size_t>(Statistic::M)] = M;
  if (joint) {
    s.values[static_cast<std::size_t>(Statistic::Mq)] = Mq;
    s.values[static_cast<std::size_t>(Statistic::Mqr)] = Mqr;
  }
  return s;
}

GmcSnapshot mollified_statistics(const StarScaleKernel& k, const Mollifier& m, const ReferenceMeasure& mu,
                                 std::span<const std::size_t> E, const TruncationParams& p, const FieldPath& joint) {
  p.validate();
  if (joint.mollified.size() != mu.size()) throw UsageError("path carries no mollified values");
  if (joint.checkpoint_times.empty() || joint.checkpoint_times.back() + 1e-9 < m.t_eps())
    throw UsageError("joint path horizon is below t_eps");
  const std::size_t j = joint.checkpoint_index(m.t_eps());
  const FieldState st = joint.state(j);
  return mollified_statistics(joint.mollified, mollified_variance(k, m), m.eps(), mu, E, p.q, &st);
}

std::vector<std::size_t> all_atoms(const ReferenceMeasure& mu) {
  std::vector<std::size_t> e(mu.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = i;
  return e;
}

std::vector<std::size_t> atoms_in(const ReferenceMeasure& mu, const Point& lo, const Point& hi) {
  std::vector<std::size_t> e;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Point& x = mu.points[i];
    bool inside = x[0] >= lo[0] && x[0] <= hi[0];
    if (mu.d == 2) inside = inside && x[1] >= lo[1] && x[1] <= hi[1];
    if (inside) e.push_back(i);
  }
  return e;
}

namespace {

std::vector<std::vector<std::size_t>> resolve_subsets(const ReferenceMeasure& mu, const EnsembleSpec& spec) {
  if (spec.subsets.empty()) return {all_atoms(mu)};
  for (const auto& e : spec.subsets)
    for (std::size_t i : e)
      if (i >= mu.size()) throw UsageError("subset index out of range");
  return spec.subsets;
}

}  // namespace

Ensemble run_ensemble(const StarScaleKernel& k, const ScaleGrid& grid, const ReferenceMeasure& mu,
                      const EnsembleSpec& spec) {
  spec.trunc.validate();
  if (spec.replicas == 0) throw ValidationError("ensemble: replica count must be >= 1");
  if (mu.size() == 0) throw ValidationError("ensemble: the measure has no atoms");
  const auto subsets = resolve_subsets(mu, spec);
  const std::size_t ncp = grid.checkpoints().size();
  Ensemble out(subsets.size(), std::vector<std::vector<GmcSnapshot>>(spec.replicas, std::vector<GmcSnapshot>(ncp)));
  ScaleFieldSampler sampler(k, grid, mu.points, spec.trunc.shift());
  SamplerOptions opts = spec.options;
  opts.every_step = false;
  sampler.run(spec.seed, 0, spec.replicas, [&](std::size_t rep, const FieldState& st) {
    for (std::size_t s = 0; s < subsets.size(); ++s)
      out[s][rep][st.checkpoint] = snapshot_statistics(st, mu, subsets[s], spec.trunc.q, spec.keep_atoms);
  }, opts);
  return out;
}

std::vector<std::vector<GmcSnapshot>> run_mollified_ensemble(const StarScaleKernel& k, const Mollifier& m,
                                                             const ReferenceMeasure& mu, const EnsembleSpec& spec,
                                                             bool joint, double dt) {
  spec.trunc.validate();
  if (spec.replicas == 0) throw ValidationError("ensemble: replica count must be >= 1");
  const auto subsets = resolve_subsets(mu, spec);
  const double kdiag = mollified_variance(k, m);
  std::vector<std::vector<GmcSnapshot>> out(subsets.size(), std::vector<GmcSnapshot>(spec.replicas));
  if (!joint) {
    const Eigen::MatrixXd x = sample_mollified_field(k, m, mu.points, spec.seed, spec.replicas);
    std::vector<double> row(mu.size());
    for (std::size_t rep = 0; rep < spec.replicas; ++rep) {
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = x(static_cast<Eigen::Index>(rep), static_cast<Eigen::Index>(i));
      for (std::size_t s = 0; s < subsets.size(); ++s)
        out[s][rep] = mollified_statistics(row, kdiag, m.eps(), mu, subsets[s], spec.trunc.q);
    }
    return out;
  }
  ScaleGrid grid({0.0, m.t_eps()}, dt);
  JointMollifiedSampler sampler(k, m, grid, mu.points, spec.trunc.shift());
  sampler.run(spec.seed, spec.replicas, [&](std::size_t rep, const FieldState& st) {
    if (st.mollified.empty()) return;
    for (std::size_t s = 0; s < subsets.size(); ++s)
      out[s][rep] = mollified_statistics(st.mollified, kdiag, m.eps(), mu, subsets[s], spec.trunc.q, &st);
  }, spec.options);
  return out;
}

std::vector<double> column(const std::vector<std::vector<GmcSnapshot>>& snapshots, std::size_t j, Statistic s,
                           bool scaled) {
  std::vector<double> c;
  c.reserve(snapshots.size());
  for (const auto& rep : snapshots) {
    if (j >= rep.size()) throw UsageError("checkpoint index out of range");
    c.push_back(scaled ? rep[j].scaled(s) : rep[j][s]);
  }
  return c;
}

std::vector<MomentRow> ensemble_moments(const std::vector<std::vector<GmcSnapshot>>& snapshots,
                                        std::span<const Statistic> stats, bool scaled) {
  if (snapshots.size() < 100) {
    std::ostringstream os;
    os << "ensemble moments need at least 100 replicas, got " << snapshots.size();
    throw ValidationError(os.str());
  }
  std::vector<MomentRow> rows;
  const std::size_t ncp = snapshots.front().size();
  for (std::size_t j = 0; j < ncp; ++j) {
    for (Statistic s : stats) {
      const std::vector<double> c = column(snapshots, j, s, scaled);
      MomentRow row;
      row.t = snapshots.front()[j].t;
      row.stat = s;
      row.scaled = scaled;
      row.mean = mc_mean(c);
      row.variance = sample_variance(c);
      row.ci_lo = row.mean.value - 1.96 * row.mean.se;
      row.ci_hi = row.mean.value + 1.96 * row.mean.se;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace gmc
