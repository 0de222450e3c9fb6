#include "gmc/runner/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "gmc/brownian.hpp"
#include "gmc/diagnostics.hpp"
#include "gmc/field.hpp"
#include "gmc/rng.hpp"

namespace gmc::runner {

using nlohmann::json;

bool Report::all_passed() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

json est(const McEstimate& e) { return {{"value", e.value}, {"se", e.se}, {"n", e.n}}; }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void add_estimate_rows(Report& rep, double t, const std::string& name, const McEstimate& e) {
  rep.rows.push_back({-1, t, name, e.value});
  rep.rows.push_back({-1, t, name + ".se", e.se});
}

PathConfig path_config(const RunConfig& cfg, double horizon, double dt, double growth, const std::string& label) {
  PathConfig p;
  p.horizon = horizon;
  p.dt = dt;
  p.replicas = cfg.paths.replicas;
  p.seed = derive_seed(cfg.seed, 0, label);
  p.growth = growth;
  return p;
}

SamplerOptions sampler_options(const RunConfig& cfg) {
  SamplerOptions o;
  o.threads = cfg.threads;
  return o;
}

// First positive checkpoint >= 4, the reference scale of the growth checks.
std::size_t reference_checkpoint(const std::vector<double>& cps) {
  for (std::size_t j = 0; j < cps.size(); ++j)
    if (cps[j] >= 4.0) return j;
  for (std::size_t j = 0; j < cps.size(); ++j)
    if (cps[j] > 0.0) return j;
  return 0;
}

// A box around the midpoint between atom 0 and its nearest neighbour, small
// enough to hold no atom.
std::vector<std::size_t> null_subset(const ReferenceMeasure& mu, Point& lo, Point& hi) {
  lo = hi = Point{-10.0, -10.0};
  if (mu.size() < 2) return {};
  std::size_t nn = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < mu.size(); ++i) {
    const double r = distance(mu.points[0], mu.points[i]);
    if (r < best) {
      best = r;
      nn = i;
    }
  }
  const Point m{(mu.points[0][0] + mu.points[nn][0]) / 2, (mu.points[0][1] + mu.points[nn][1]) / 2};
  const double h = best / 8;
  lo = {m[0] - h, m[1] - h};
  hi = {m[0] + h, m[1] + h};
  return atoms_in(mu, lo, hi);
}

// The lower-left dyadic block of the bounding box.
std::vector<std::size_t> dyadic_subset(const ReferenceMeasure& mu) {
  Point hi = mu.box_hi;
  hi[0] = (mu.box_lo[0] + mu.box_hi[0]) / 2;
  if (mu.d == 2) hi[1] = (mu.box_lo[1] + mu.box_hi[1]) / 2;
  return atoms_in(mu, mu.box_lo, hi);
}

void add_snapshot_rows(Report& rep, const std::vector<std::vector<GmcSnapshot>>& ens, const std::string& prefix) {
  for (std::size_t r = 0; r < ens.size(); ++r)
    for (const GmcSnapshot& s : ens[r])
      for (Statistic st : kStatistics) rep.rows.push_back({static_cast<long>(r), s.t, prefix + to_string(st), s[st]});
}

json moments_json(const std::vector<MomentRow>& rows) {
  json out = json::array();
  for (const auto& m : rows)
    out.push_back({{"t", m.t}, {"statistic", to_string(m.stat)}, {"scaled", m.scaled}, {"mean", est(m.mean)},
                   {"variance", est(m.variance)}, {"ci", {m.ci_lo, m.ci_hi}}});
  return out;
}

// Reference classifications for the Dvoretzky-Erdos test.
Check de_classifier_check() {
  struct Case {
    EnvelopeFn f;
    DeClass expect;
  };
  const std::vector<Case> cases{
      {EnvelopeFn::power(0.1), DeClass::Converges},      {EnvelopeFn::power(0.3), DeClass::Converges},
      {EnvelopeFn::power(0.45), DeClass::Converges},     {EnvelopeFn::sqrt_log(1.5, -1), DeClass::Converges},
      {EnvelopeFn::sqrt_log(2.0, -1), DeClass::Converges}, {EnvelopeFn::power(0.5), DeClass::Diverges},
      {EnvelopeFn::sqrt_log(1.0, -1), DeClass::Diverges}, {EnvelopeFn::power(0.5, 1.0, 1.0), DeClass::Diverges},
  };
  Check c{"de-classifier", true, "", json::array()};
  for (const auto& k : cases) {
    const DeResult r = dvoretzky_erdos_test(k.f);
    const bool ok = r.classification == k.expect;
    c.passed = c.passed && ok;
    c.values.push_back({{"envelope", k.f.describe()},
                        {"expected", k.expect == DeClass::Converges ? "converges" : "diverges"},
                        {"got", r.classification == DeClass::Converges ? "converges" : "diverges"}});
  }
  c.detail = c.passed ? "all example classifications reproduced" : "misclassified example";
  return c;
}

// ---------------------------------------------------------------------------

void covariance_validation(const RunConfig& cfg, Report& rep) {
  const StarScaleKernel k = cfg.kernel->build();
  const ScaleGrid grid = cfg.grid();
  const double x0 = 0.2;
  const std::vector<double> seps{0.0, 0.1, 0.5, 1.2};
  std::vector<Point> sites{{x0, 0.0}};
  for (std::size_t i = 1; i < seps.size(); ++i) sites.push_back({x0 + seps[i], 0.0});

  std::vector<double> times;
  for (double t : grid.checkpoints())
    if (t > 0.0) times.push_back(t);
  if (times.empty()) throw UsageError("covariance-validation needs a positive checkpoint");

  std::vector<CovProbe> probes;
  for (double t : times)
    for (std::size_t i = 0; i < seps.size(); ++i) probes.push_back({0, i, t, t});
  if (times.size() >= 2) {
    probes.push_back({0, 0, times.front(), times.back()});
    probes.push_back({0, 1, times.front(), times.back()});
  }

  if (cfg.wants("covariance")) {
    ScaleFieldSampler sampler(k, grid, sites);
    const auto paths = sampler.sample_paths(cfg.seed, cfg.replicas, false, sampler_options(cfg));
    const auto cov = empirical_covariance(paths, probes);
    Check c{"covariance", true, "", json::array()};
    double worst = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const auto& pr = probes[p];
      const double s = std::min(pr.time_a, pr.time_b);
      const double exact = eval_kbar(k, s, sites[pr.site_a], sites[pr.site_b]);
      const double z = cov[p].se > 0 ? std::abs(cov[p].value - exact) / cov[p].se
                                     : (cov[p].value == exact ? 0.0 : std::numeric_limits<double>::infinity());
      worst = std::max(worst, z);
      const double sep = distance(sites[pr.site_a], sites[pr.site_b]);
      c.values.push_back({{"separation", sep}, {"s", pr.time_a}, {"t", pr.time_b}, {"estimate", cov[p].value},
                          {"se", cov[p].se}, {"exact", exact}, {"z", z}});
      rep.rows.push_back({-1, pr.time_b, "cov(sep=" + fmt(sep) + ",s=" + fmt(pr.time_a) + ")", cov[p].value});
      rep.rows.push_back({-1, pr.time_b, "kbar(sep=" + fmt(sep) + ",s=" + fmt(pr.time_a) + ")", exact});
    }
    c.passed = worst <= 3.0;
    c.detail = "max |z| over " + std::to_string(probes.size()) + " probes = " + fmt(worst);
    rep.checks.push_back(c);
  }

  if (cfg.wants("variance")) {
    // single-site ensemble, sized by paths.replicas
    ScaleFieldSampler one(k, grid, {sites[0]});
    const std::size_t n = cfg.paths.replicas;
    std::vector<std::vector<double>> vals(grid.checkpoints().size(), std::vector<double>(n));
    SamplerOptions o = sampler_options(cfg);
    o.chunk = 256;
    one.run(derive_seed(cfg.seed, 0, "variance"), 0, n,
            [&](std::size_t r, const FieldState& st) { vals[st.checkpoint][r] = st.values[0]; }, o);
    Check c{"variance", true, "", json::array()};
    double worst = 0.0;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double t = grid.checkpoints()[j];
      if (t <= 0.0) continue;
      const McEstimate v = sample_variance(vals[j]);
      const double rel = std::abs(v.value - t) / t;
      worst = std::max(worst, rel);
      c.values.push_back({{"t", t}, {"variance", est(v)}, {"relative_error", rel}});
      add_estimate_rows(rep, t, "var", v);
    }
    c.passed = worst <= 0.01;
    c.detail = "max relative error of Var(Xbar_t) = " + fmt(worst) + " over " + std::to_string(n) + " replicas";
    rep.checks.push_back(c);
  }
}

void brownian_closed_forms(const RunConfig& cfg, Report& rep) {
  const double dt = cfg.paths.dt;
  auto closed = [&](const std::string& name, const McEstimate& mc, double exact, double t) {
    const double z = z_score(mc, exact);
    add_estimate_rows(rep, t, name + ".mc", mc);
    rep.rows.push_back({-1, t, name + ".exact", exact});
    Check c{name, z <= 3.0, "MC " + fmt(mc.value) + " +- " + fmt(mc.se) + " vs " + fmt(exact) + ", z = " + fmt(z),
            {{"mc", est(mc)}, {"exact", exact}, {"z", z}}};
    rep.checks.push_back(c);
  };
  if (cfg.wants("stay-positive"))
    closed("stay-positive", mc_stay_positive(1.0, 1.0, path_config(cfg, 1.0, dt, 0.0, "closed-stay")),
           stay_positive_prob(1.0, 1.0), 1.0);
  if (cfg.wants("bridge-positive"))
    closed("bridge-positive", mc_bridge_positive(1.0, 1.0, 2.0, path_config(cfg, 2.0, dt, 0.0, "closed-bridge")),
           bridge_positive_prob(1.0, 1.0, 2.0), 2.0);
  if (cfg.wants("below-line")) {
    // P[escape after T = 8] is ~3e-5, well under the Monte Carlo error
    closed("below-line", mc_below_line(1.0, 1.0, path_config(cfg, 8.0, dt, 0.0, "closed-line")),
           below_line_prob(1.0, 1.0), 8.0);
  }
  if (cfg.wants("doob-mckean")) {
    const DoobMcKeanCheck d = doob_mckean_check(1.0, 1.0, 2.0, path_config(cfg, 1.0, dt, 0.0, "closed-doob"));
    const double z = z_score(d.weighted_brownian, d.bessel);
    add_estimate_rows(rep, 1.0, "doob.weighted", d.weighted_brownian);
    add_estimate_rows(rep, 1.0, "doob.bessel", d.bessel);
    rep.checks.push_back({"doob-mckean", z <= 3.0,
                          "weighted Brownian " + fmt(d.weighted_brownian.value) + " vs Bessel-3 "
                              + fmt(d.bessel.value) + ", z = " + fmt(z),
                          {{"weighted_brownian", est(d.weighted_brownian)}, {"bessel", est(d.bessel)}, {"z", z}}});
  }
}

void martingale_identities(const RunConfig& cfg, Report& rep) {
  const StarScaleKernel k = cfg.kernel->build();
  const ScaleGrid grid = cfg.grid();
  const ReferenceMeasure mu = cfg.measure->build();
  Point nlo, nhi;
  const std::vector<std::size_t> full = all_atoms(mu), null = null_subset(mu, nlo, nhi), sub = dyadic_subset(mu);
  EnsembleSpec spec;
  spec.subsets = {full, null, sub};
  spec.trunc = cfg.truncation;
  spec.replicas = cfg.replicas;
  spec.seed = cfg.seed;
  spec.options = sampler_options(cfg);
  const Ensemble ens = run_ensemble(k, grid, mu, spec);
  add_snapshot_rows(rep, ens[0], "");
  add_snapshot_rows(rep, ens[2], "sub:");

  const double mass = mu.total_mass, q = cfg.truncation.q;
  const auto& cps = grid.checkpoints();
  const std::vector<Statistic> all(kStatistics.begin(), kStatistics.end());
  rep.summary["moments"] = moments_json(ensemble_moments(ens[0], all));
  rep.summary["subset_moments"] = moments_json(ensemble_moments(ens[2], all));
  rep.summary["subset_mass"] = mu.mass(sub);
  rep.summary["atoms"] = mu.size();

  auto mean_check = [&](const std::string& name, Statistic s, double target) {
    Check c{name, true, "", json::array()};
    double worst = 0.0;
    for (std::size_t j = 0; j < cps.size(); ++j) {
      if (cps[j] <= 0.0) continue;
      const McEstimate m = mc_mean(column(ens[0], j, s));
      const double z = z_score(m, target);
      worst = std::max(worst, z);
      c.values.push_back({{"t", cps[j]}, {"mean", est(m)}, {"target", target}, {"z", z}});
    }
    c.passed = worst <= 3.0;
    c.detail = "max |z| = " + fmt(worst) + " against " + fmt(target);
    rep.checks.push_back(c);
  };
  if (cfg.wants("mean-mass")) mean_check("mean-mass", Statistic::M, mass);
  if (cfg.wants("mean-dq")) mean_check("mean-dq", Statistic::Dq, q * mass);

  if (cfg.wants("supermartingale")) {
    Check c{"supermartingale", true, "", json::array()};
    for (std::size_t j = 1; j < cps.size(); ++j) {
      const auto a = column(ens[0], j - 1, Statistic::Dqr), b = column(ens[0], j, Statistic::Dqr);
      std::vector<double> diff(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) diff[i] = b[i] - a[i];
      const McEstimate d = mc_mean(diff);
      const bool ok = d.value - 1.96 * d.se <= 0.0;
      c.passed = c.passed && ok;
      c.values.push_back({{"from", cps[j - 1]}, {"to", cps[j]}, {"increment", est(d)}, {"within_ci", ok}});
    }
    c.detail = c.passed ? "E[Dqr] non-increasing up to the 95% CI of each paired increment"
                        : "an increase of E[Dqr] exceeds its 95% CI";
    rep.checks.push_back(c);
  }

  if (cfg.wants("plateau")) {
    const double t_last = cps.back();
    const McEstimate field = mc_mean(column(ens[0], cps.size() - 1, Statistic::Dqr));
    PathConfig pc = path_config(cfg, cfg.paths.horizon, cfg.paths.dt, cfg.paths.growth, "plateau-eta");
    const SurvivalEstimate eta = eta_constant(q, cfg.truncation.rho, cfg.truncation.r, pc);
    const McEstimate target{eta.estimate.value * mass, eta.estimate.se * mass, eta.estimate.n};
    const double z = z_score(field, target);
    // the exact finite-t identity with the field's own monitoring, for reference
    PathConfig pf = path_config(cfg, t_last, grid.dt(), 0.0, "plateau-identity");
    const BrownianSurvival bs = brownian_envelope_survival(q, cfg.truncation.shift(), pf);
    const double rho_t = cfg.truncation.shift()(t_last);
    const McEstimate identity{(bs.endpoint_mean.value - rho_t * bs.probability.value) * mass,
                              std::hypot(bs.endpoint_mean.se, rho_t * bs.probability.se) * mass, bs.probability.n};
    const double z_identity = z_score(field, identity);
    add_estimate_rows(rep, t_last, "plateau.field", field);
    add_estimate_rows(rep, t_last, "plateau.eta_mu", target);
    add_estimate_rows(rep, t_last, "plateau.identity", identity);
    rep.checks.push_back(
        {"plateau", z <= 3.0,
         "E[Dqr_" + fmt(t_last) + "] = " + fmt(field.value) + " +- " + fmt(field.se) + " vs eta*mu = "
             + fmt(target.value) + " +- " + fmt(target.se) + " (horizon " + fmt(eta.horizon) + ", tail "
             + fmt(eta.tail) + "), z = " + fmt(z) + "; finite-t identity " + fmt(identity.value) + ", z = "
             + fmt(z_identity),
         {{"field", est(field)},
          {"eta_mu", est(target)},
          {"eta_horizon", eta.horizon},
          {"eta_tail", eta.tail},
          {"z", z},
          {"finite_t_identity", est(identity)},
          {"z_identity", z_identity}}});
  }

  if (cfg.wants("null-measure")) {
    bool zero = mu.mass(null) == 0.0;
    for (const auto& r : ens[1])
      for (const auto& s : r)
        for (double v : s.values) zero = zero && v == 0.0;
    rep.checks.push_back({"null-measure", zero,
                          zero ? "every statistic is exactly 0 on the null set, every replica and checkpoint"
                               : "nonzero statistic on a null set",
                          {{"box_lo", {nlo[0], nlo[1]}}, {"box_hi", {nhi[0], nhi[1]}}, {"atoms", null.size()}}});
  }

  if (cfg.wants("ordering")) {
    std::size_t bad_order = 0, bad_identity = 0, untriggered = 0;
    for (const auto& r : ens[0])
      for (const auto& s : r) {
        if (!(s[Statistic::Mqr] <= s[Statistic::Mq] && s[Statistic::Mq] <= s[Statistic::M])) ++bad_order;
        if (s[Statistic::Dq] < 0.0 || s[Statistic::Dqr] < 0.0) ++bad_order;
        if (!s.q_triggered) {
          ++untriggered;
          const double rhs = s[Statistic::D] + q * s[Statistic::M];
          if (std::abs(s[Statistic::Dq] - rhs) > 1e-12 * (std::abs(rhs) + q * s[Statistic::M])) ++bad_identity;
        }
      }
    rep.checks.push_back({"ordering", bad_order == 0 && bad_identity == 0,
                          std::to_string(bad_order) + " ordering violations, " + std::to_string(bad_identity)
                              + " identity violations over " + std::to_string(untriggered) + " untriggered snapshots",
                          {{"order_violations", bad_order}, {"identity_violations", bad_identity},
                           {"untriggered", untriggered}}});
  }
}

void convergence(const RunConfig& cfg, Report& rep) {
  const StarScaleKernel k = cfg.kernel->build();
  const ScaleGrid grid = cfg.grid();
  const ReferenceMeasure mu = cfg.measure->build();
  EnsembleSpec spec;
  spec.trunc = cfg.truncation;
  spec.replicas = cfg.replicas;
  spec.seed = cfg.seed;
  spec.options = sampler_options(cfg);
  const Ensemble ens = run_ensemble(k, grid, mu, spec);
  add_snapshot_rows(rep, ens[0], "");
  const ConvergenceReport cr = convergence_diagnostic(ens[0]);
  json rows = json::array();
  for (const auto& r : cr.rows) {
    rows.push_back({{"t", r.t},
                    {"mean_abs_diff", est(r.mean_abs_diff)},
                    {"correlation", est(r.correlation)},
                    {"t_second_moment", est(r.t_second_moment)},
                    {"mean_dqr", est(r.mean_dqr)},
                    {"mean_scaled_mqr", est(r.mean_scaled_mqr)},
                    {"mean_scaled_m", est(r.mean_scaled_m)},
                    {"median_scaled_m", r.median_scaled_m}});
    add_estimate_rows(rep, r.t, "corr", r.correlation);
    add_estimate_rows(rep, r.t, "t_m2", r.t_second_moment);
    add_estimate_rows(rep, r.t, "mean_abs_diff", r.mean_abs_diff);
  }
  rep.summary["diagnostic"] = rows;
  rep.summary["atoms"] = mu.size();

  if (cfg.wants("second-moment")) {
    const std::size_t ref = reference_checkpoint(grid.checkpoints());
    const double t_ref = grid.checkpoints()[ref];
    double ref_value = 0.0, worst = 0.0;
    for (const auto& r : cr.rows)
      if (r.t == t_ref) ref_value = r.t_second_moment.value;
    json vals = json::array();
    for (const auto& r : cr.rows) {
      if (r.t < t_ref) continue;
      const double ratio = r.t_second_moment.value / ref_value;
      worst = std::max(worst, ratio);
      vals.push_back({{"t", r.t}, {"t_second_moment", est(r.t_second_moment)}, {"ratio", ratio}});
    }
    rep.checks.push_back({"second-moment", worst <= 3.0,
                          "max_t t E[Mqr^2] / value at t = " + fmt(t_ref) + " is " + fmt(worst), vals});
  }
  if (cfg.wants("correlation-trend")) {
    const double last = cr.rows.empty() ? 0.0 : cr.rows.back().correlation.value;
    json vals = json::array();
    for (const auto& r : cr.rows) vals.push_back({{"t", r.t}, {"correlation", est(r.correlation)}});
    const bool ok = cr.correlation_increasing && last > 0.9;
    rep.checks.push_back({"correlation-trend", ok,
                          std::string(cr.correlation_increasing ? "increasing" : "not increasing")
                              + ", final correlation " + fmt(last),
                          vals});
  }
  if (cfg.wants("mean-vs-median")) {
    // sqrt(pi t/2) E[M_t] = sqrt(pi t/2) mu while the median decays
    double worst = 0.0;
    json vals = json::array();
    for (const auto& r : cr.rows) {
      const double target = std::sqrt(std::numbers::pi * r.t / 2) * mu.total_mass;
      const double z = z_score(r.mean_scaled_m, target);
      worst = std::max(worst, z);
      vals.push_back({{"t", r.t}, {"mean", est(r.mean_scaled_m)}, {"target", target}, {"z", z},
                      {"median", r.median_scaled_m}});
    }
    const bool median_below = !cr.rows.empty() && cr.rows.back().median_scaled_m < cr.rows.back().mean_scaled_m.value;
    rep.checks.push_back({"mean-vs-median", worst <= 3.0 && median_below,
                          "max |z| of the scaled mean = " + fmt(worst) + "; final median "
                              + (median_below ? "below" : "not below") + " the mean",
                          vals});
  }
}

void mollified_convergence(const RunConfig& cfg, Report& rep) {
  const StarScaleKernel k = cfg.kernel->build();
  const ReferenceMeasure mu = cfg.measure->build();
  Point nlo, nhi;
  const std::vector<std::size_t> full = all_atoms(mu), null = null_subset(mu, nlo, nhi);
  std::vector<double> eps = cfg.eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());

  // standalone M_eps per bump family, independent streams per family
  std::map<std::pair<std::size_t, std::size_t>, McEstimate> scaled_means;
  Check mean{"mean-mass", true, "", json::array()};
  bool null_zero = mu.mass(null) == 0.0;
  double worst = 0.0;
  for (std::size_t b = 0; b < cfg.mollifiers.size(); ++b) {
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const Mollifier m(cfg.mollifiers[b], k.dimension(), eps[e]);
      EnsembleSpec spec;
      spec.subsets = {full, null};
      spec.trunc = cfg.truncation;
      spec.replicas = cfg.replicas;
      spec.seed = derive_seed(cfg.seed, b, "mollifier-family");
      spec.options = sampler_options(cfg);
      const auto ens = run_mollified_ensemble(k, m, mu, spec, false, cfg.dt);
      std::vector<double> raw, scaled;
      for (std::size_t r = 0; r < ens[0].size(); ++r) {
        raw.push_back(ens[0][r][Statistic::M]);
        scaled.push_back(ens[0][r].scaled(Statistic::M));
        rep.rows.push_back({static_cast<long>(r), m.t_eps(), to_string(cfg.mollifiers[b]) + ":M_eps", raw.back()});
        null_zero = null_zero && ens[1][r][Statistic::M] == 0.0;
      }
      const McEstimate mm = mc_mean(raw);
      const double z = z_score(mm, mu.total_mass);
      worst = std::max(worst, z);
      scaled_means[{b, e}] = mc_mean(scaled);
      mean.values.push_back({{"bump", to_string(cfg.mollifiers[b])}, {"eps", eps[e]}, {"mean", est(mm)}, {"z", z},
                             {"scaled_mean", est(scaled_means[{b, e}])}});
    }
  }
  mean.passed = worst <= 3.0;
  mean.detail = "max |z| of E[M_eps] against mu(E) = " + fmt(worst);
  if (cfg.wants("mean-mass")) rep.checks.push_back(mean);
  if (cfg.wants("null-measure"))
    rep.checks.push_back({"null-measure", null_zero,
                          null_zero ? "M_eps is exactly 0 on the null set for every replica" : "nonzero M_eps on a null set",
                          json::object()});

  if (cfg.wants("mollifier-invariance")) {
    Check c{"mollifier-invariance", true, "", json::array()};
    if (cfg.mollifiers.size() < 2 || cfg.mollifiers[0] == cfg.mollifiers[1]) {
      c.passed = false;
      c.detail = "needs two distinct bump families under /mollifier/bumps";
    } else {
      double zmax = 0.0;
      for (std::size_t e = 0; e < eps.size(); ++e) {
        const McEstimate a = scaled_means[{0, e}], b = scaled_means[{1, e}];
        const double z = z_score(a, b);
        zmax = std::max(zmax, z);
        c.values.push_back({{"eps", eps[e]}, {to_string(cfg.mollifiers[0]), est(a)}, {to_string(cfg.mollifiers[1]), est(b)},
                            {"z", z}});
      }
      c.passed = zmax <= 3.0;
      c.detail = "max |z| between bump families = " + fmt(zmax);
    }
    rep.checks.push_back(c);
  }

  if (cfg.wants("joint-correlation")) {
    const Mollifier probe(cfg.mollifiers[0], k.dimension(), eps.front());
    Check c{"joint-correlation", true, "", json::array()};
    double prev = -2.0;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const Mollifier m(cfg.mollifiers[0], k.dimension(), eps[e]);
      EnsembleSpec spec;
      spec.subsets = {full};
      spec.trunc = cfg.truncation;
      spec.replicas = cfg.replicas;
      spec.seed = derive_seed(cfg.seed, e, "joint-eps");
      spec.options = sampler_options(cfg);
      const auto ens = run_mollified_ensemble(k, m, mu, spec, true, cfg.dt);
      std::vector<double> mq, dq;
      for (std::size_t r = 0; r < ens[0].size(); ++r) {
        mq.push_back(ens[0][r].scaled(Statistic::Mq));
        dq.push_back(ens[0][r][Statistic::Dq]);
        rep.rows.push_back({static_cast<long>(r), m.t_eps(), "joint:Mq_eps", ens[0][r][Statistic::Mq]});
        rep.rows.push_back({static_cast<long>(r), m.t_eps(), "joint:Dq", dq.back()});
      }
      const McEstimate corr = sample_correlation(mq, dq);
      const bool ok = corr.value > 0.0 && corr.value > prev;
      c.passed = c.passed && ok;
      prev = corr.value;
      c.values.push_back({{"eps", eps[e]}, {"correlation", est(corr)}});
      add_estimate_rows(rep, m.t_eps(), "joint:corr", corr);
    }
    c.detail = c.passed ? "positive and increasing as eps decreases" : "not positive and increasing in 1/eps";
    rep.checks.push_back(c);
  }
}

void degeneracy(const RunConfig& cfg, Report& rep) {
  const StarScaleKernel k = cfg.kernel->build();
  const ScaleGrid grid = cfg.grid();
  DegeneracyConfig dc;
  dc.cantor = cfg.measure->cantor;
  dc.contrast = cfg.contrast->build();
  dc.contrast_rho = *cfg.contrast_envelope;
  dc.alpha = cfg.alpha;
  dc.q = cfg.truncation.q;
  dc.replicas = cfg.replicas;
  dc.seed = cfg.seed;
  dc.options = sampler_options(cfg);
  dc.bound_paths = path_config(cfg, 1.0, cfg.paths.dt, cfg.paths.growth, "decay-bound");
  const DegeneracyReport dr = degeneracy_diagnostic(k, grid, dc);

  auto rows_json = [&](const std::vector<DegeneracyRow>& rows, const std::string& prefix) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"t", r.t}, {"median_scaled_m", r.median_scaled_m},
                     {"upper_quartile_scaled_m", r.upper_quartile_scaled_m}, {"median_d", r.median_d},
                     {"upper_quartile_d", r.upper_quartile_d}});
      rep.rows.push_back({-1, r.t, prefix + "median_scaled_m", r.median_scaled_m});
      rep.rows.push_back({-1, r.t, prefix + "uq_scaled_m", r.upper_quartile_scaled_m});
      rep.rows.push_back({-1, r.t, prefix + "median_d", r.median_d});
      rep.rows.push_back({-1, r.t, prefix + "uq_d", r.upper_quartile_d});
    }
    return out;
  };
  auto sup_json = [&](const std::vector<SupFieldRow>& rows, const std::string& prefix) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"n", r.n}, {"t_n", r.t_n}, {"t_used", r.t_used}, {"median", r.median},
                     {"upper_quartile", r.upper_quartile}});
      rep.rows.push_back({-1, r.t_used, prefix + "sup_field_median", r.median});
    }
    return out;
  };
  rep.summary["cantor"] = rows_json(dr.cantor, "cantor:");
  rep.summary["contrast"] = rows_json(dr.contrast, "contrast:");
  rep.summary["cantor_sup_field"] = sup_json(dr.cantor_sup, "cantor:");
  rep.summary["contrast_sup_field"] = sup_json(dr.contrast_sup, "contrast:");
  rep.summary["cantor_sup_over_n_median"] = dr.cantor_sup_median;
  rep.summary["contrast_sup_over_n_median"] = dr.contrast_sup_median;

  const std::size_t ref = reference_checkpoint(grid.checkpoints());
  const std::size_t last = grid.checkpoints().size() - 1;
  if (cfg.wants("cantor-decay")) {
    const double a = dr.cantor[ref].median_scaled_m, b = dr.cantor[last].median_scaled_m;
    rep.checks.push_back({"cantor-decay", b <= 0.5 * a,
                          "median sqrt(pi t/2) M_t on the Cantor measure: " + fmt(a) + " at t = "
                              + fmt(dr.cantor[ref].t) + ", " + fmt(b) + " at t = " + fmt(dr.cantor[last].t)
                              + " (ratio " + fmt(b / a) + ")",
                          {{"reference", a}, {"last", b}, {"ratio", b / a}}});
  }
  if (cfg.wants("contrast-band")) {
    const double a = dr.contrast[ref].median_scaled_m;
    double lo = 1.0, hi = 1.0;
    for (std::size_t j = ref; j <= last; ++j) {
      lo = std::min(lo, dr.contrast[j].median_scaled_m / a);
      hi = std::max(hi, dr.contrast[j].median_scaled_m / a);
    }
    rep.checks.push_back({"contrast-band", lo >= 0.5 && hi <= 2.0,
                          "contrast median relative to t = " + fmt(dr.contrast[ref].t) + " ranges over [" + fmt(lo)
                              + ", " + fmt(hi) + "]",
                          {{"min_ratio", lo}, {"max_ratio", hi}}});
  }
  if (cfg.wants("decay-bound")) {
    json vals = json::array();
    bool ok = dr.decay_bound.size() >= 2;
    for (std::size_t i = 0; i < dr.decay_bound.size(); ++i) {
      const auto& b = dr.decay_bound[i];
      vals.push_back({{"t", b.t}, {"bound", est(b.bound.estimate)}});
      add_estimate_rows(rep, b.t, "decay_bound", b.bound.estimate);
      if (i > 0) {
        const auto& p = dr.decay_bound[i - 1].bound.estimate;
        ok = ok && b.bound.estimate.value <= p.value + 1.96 * std::hypot(p.se, b.bound.estimate.se);
      }
    }
    if (ok) ok = dr.decay_bound.back().bound.estimate.value < dr.decay_bound.front().bound.estimate.value;
    rep.checks.push_back({"decay-bound", ok,
                          ok ? "q Q_q[beta >= theta/2 on [0, t]] decreases in t"
                             : "the bound does not decrease over the grid",
                          vals});
  }
}

void capacity(const RunConfig& cfg, Report& rep) {
  const CantorSpec spec = cfg.measure->cantor;
  const double alpha = cfg.alpha;
  if (cfg.wants("bracket")) {
    const ReferenceMeasure mu = build_cantor(spec);
    const double atomized = capacity_integral(mu, scaled_envelope(spec.schedule, alpha));
    const CapacityBracket b = cantor_capacity_bounds(spec, alpha, spec.level);
    const bool ok = atomized >= b.lower * (1 - 1e-12) && atomized <= b.upper * (1 + 1e-12);
    rep.rows.push_back({-1, static_cast<double>(spec.level), "capacity.atomized", atomized});
    rep.rows.push_back({-1, static_cast<double>(spec.level), "capacity.lower", b.lower});
    rep.rows.push_back({-1, static_cast<double>(spec.level), "capacity.upper", b.upper});
    rep.checks.push_back({"bracket", ok,
                          "atomized " + fmt(atomized) + " in [" + fmt(b.lower) + ", " + fmt(b.upper) + "]",
                          {{"atomized", atomized}, {"lower", b.lower}, {"upper", b.upper}, {"alpha", alpha}}});
  }
  if (cfg.wants("alpha-threshold")) {
    const double threshold = 1.0 / std::sqrt(std::numbers::ln2);
    const CapacityBracket above = cantor_capacity_bounds(spec, alpha, spec.level);
    const CapacityBracket zero = cantor_capacity_bounds(spec, 0.0, spec.level);
    const bool ok = (alpha <= threshold || above.converged) && !zero.converged;
    rep.rows.push_back({-1, alpha, "alpha.upper_total", above.upper_total});
    rep.checks.push_back({"alpha-threshold", ok,
                          "alpha = " + fmt(alpha) + " (threshold " + fmt(threshold) + "): "
                              + (above.converged ? "converges" : "does not converge") + " (upper total "
                              + fmt(above.upper_total) + " over " + std::to_string(above.levels_used)
                              + " levels); alpha = 0: " + (zero.converged ? "converges" : "diverges"),
                          {{"alpha", alpha},
                           {"converged", above.converged},
                           {"upper_total", above.upper_total},
                           {"levels_used", above.levels_used},
                           {"alpha_zero_converged", zero.converged},
                           {"regular_variation_family", above.regular_variation_family}}});
  }
  if (cfg.wants("de-classifier")) rep.checks.push_back(de_classifier_check());
}

void envelope_tests(const RunConfig& cfg, Report& rep) {
  const EnvelopeFn& rho = *cfg.envelope;
  const DeResult de = dvoretzky_erdos_test(rho);
  rep.summary["envelope"] = rho.describe();
  rep.summary["classification"] = de.classification == DeClass::Converges ? "converges" : "diverges";
  rep.summary["warnings"] = envelope_warnings(rho);
  if (cfg.wants("de-classifier")) rep.checks.push_back(de_classifier_check());

  const std::vector<double> rs{0.0, 10.0, 1e3, 1e6};
  if (cfg.wants("shift-decay")) {
    bool ok = true;
    double prev = std::numeric_limits<double>::infinity();
    json vals = json::array();
    for (double r : rs) {
      const double g = shifted_gap(rho, r, 10.0);
      ok = ok && g <= prev;
      prev = g;
      vals.push_back({{"r", r}, {"gap", g}});
      rep.rows.push_back({-1, r, "shifted_gap(u=10)", g});
    }
    const bool applies = rho.concave() && de.classification == DeClass::Converges;
    if (applies) ok = ok && prev < 1e-2;
    rep.checks.push_back({"shift-decay", ok,
                          std::string("rho_r(10) non-increasing in r") + (applies ? ", below 1e-2 at r = 1e6" : ""),
                          vals});
  }
  if (cfg.wants("survival-in-r")) {
    bool ok = true;
    McEstimate prev{-1.0, 0.0, 0};
    json vals = json::array();
    for (double r : rs) {
      PathConfig pc = path_config(cfg, cfg.paths.horizon, cfg.paths.dt, cfg.paths.growth, "survival-in-r");
      const SurvivalEstimate s = envelope_survival_prob(3.0, ShiftedEnvelope{rho, r}, pc);
      ok = ok && s.estimate.value >= prev.value - 3.0 * std::hypot(prev.se, s.estimate.se);
      prev = s.estimate;
      vals.push_back({{"r", r}, {"survival", est(s.estimate)}, {"horizon", s.horizon}, {"tail", s.tail}});
      add_estimate_rows(rep, r, "survival(a=3)", s.estimate);
    }
    rep.checks.push_back({"survival-in-r", ok, "Q_3[beta >= rho_r] non-decreasing in r within 3 SE", vals});
  }
  if (cfg.wants("eta-limits")) {
    const double q = cfg.truncation.q > 0.0 ? cfg.truncation.q : 1.0;
    PathConfig pc = path_config(cfg, cfg.paths.horizon, cfg.paths.dt, cfg.paths.growth, "eta-limits");
    const SurvivalEstimate zero = eta_constant(q, EnvelopeFn::zero(), 0.0, pc);
    bool ok = zero.estimate.value == q;
    json vals{{"zero_envelope", est(zero.estimate)}};
    if (de.classification == DeClass::Converges) {
      const SurvivalEstimate far = eta_constant(q, rho, 1e6, pc);
      const SurvivalEstimate at = eta_constant(q, rho, cfg.truncation.r, pc);
      ok = ok && far.estimate.value >= q * 0.99 - 3.0 * far.estimate.se && at.estimate.value > 0.0
           && at.estimate.value <= q + 3.0 * at.estimate.se;
      vals["r_1e6"] = est(far.estimate);
      vals["r_config"] = est(at.estimate);
      add_estimate_rows(rep, cfg.truncation.r, "eta", at.estimate);
      add_estimate_rows(rep, 1e6, "eta", far.estimate);
    }
    rep.checks.push_back({"eta-limits", ok, "eta(q, 0) = q exactly; eta -> q as r grows", vals});
  }
}

}  // namespace

Report run_experiment(const RunConfig& cfg) {
  static const std::map<std::string, std::function<void(const RunConfig&, Report&)>> registry{
      {"covariance-validation", covariance_validation},
      {"brownian-closed-forms", brownian_closed_forms},
      {"martingale-identities", martingale_identities},
      {"convergence", convergence},
      {"mollified-convergence", mollified_convergence},
      {"degeneracy", degeneracy},
      {"capacity", capacity},
      {"envelope-tests", envelope_tests},
  };
  Report rep;
  rep.experiment = cfg.experiment;
  auto it = registry.find(cfg.experiment);
  if (it == registry.end()) {
    std::string names;
    for (const auto& n : experiment_names()) names += (names.empty() ? "" : ", ") + n;
    throw UsageError("unknown experiment '" + cfg.experiment + "'; valid names: " + names);
  }
  try {
    it->second(cfg, rep);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    rep.error = std::string(cfg.experiment) + ": " + e.what();
  }
  return rep;
}

}  // namespace gmc::runner
