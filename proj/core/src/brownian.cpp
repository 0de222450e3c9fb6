#include "gmc/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "gmc/errors.hpp"
#include "gmc/rng.hpp"

namespace gmc {

double stay_positive_prob(double a, double t) {
  if (!(t > 0.0)) throw DomainError("stay_positive_prob: t must be positive");
  if (!(a >= 0.0)) throw DomainError("stay_positive_prob: a must be nonnegative");
  // sqrt(2/(pi t)) int_0^a e^{-z^2/2t} dz = erf(a / sqrt(2t))
  return std::erf(a / std::sqrt(2.0 * t));
}

double bridge_positive_prob(double a, double b, double t) {
  if (!(t > 0.0)) throw DomainError("bridge_positive_prob: t must be positive");
  if (a * b < 0.0) throw DomainError("bridge_positive_prob: endpoints on opposite sides of 0");
  return -std::expm1(-2.0 * a * b / t);
}

double below_line_prob(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("below_line_prob: a and b must be positive");
  return -std::expm1(-2.0 * a * b);
}

void PathConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("path config: horizon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("path config: dt must be positive");
  if (replicas < 1) throw ValidationError("path config: need at least one replica");
  if (!(growth >= 0.0)) throw ValidationError("path config: growth must be >= 0");
}

std::vector<double> PathConfig::times() const {
  validate();
  std::vector<double> ts{0.0};
  if (growth == 0.0) {
    const double q = horizon / dt;
    const auto k = static_cast<std::size_t>(std::floor(q + 1e-9));
    for (std::size_t i = 1; i <= k; ++i) ts.push_back(std::min(horizon, dt * static_cast<double>(i)));
  } else {
    double t = 0.0, w = dt;
    while (t + w < horizon * (1.0 - 1e-12)) {
      t += w;
      ts.push_back(t);
      w *= 1.0 + growth;
    }
  }
  if (ts.back() < horizon) ts.push_back(horizon);
  return ts;
}

namespace {

PathConfig with_horizon(PathConfig cfg, double T) {
  cfg.horizon = T;
  return cfg;
}

// survival factor of a Brownian segment of duration h between distances x, y > 0
double bridge_survival(double x, double y, double h) { return -std::expm1(-2.0 * x * y / h); }

struct Bessel3 {
  double w0, w1, w2;
  explicit Bessel3(double a) : w0(a), w1(0.0), w2(0.0) {}
  double step(NormalStream& g, double h) {
    const double s = std::sqrt(h);
    w0 += s * g();
    w1 += s * g();
    w2 += s * g();
    return norm();
  }
  double norm() const { return std::sqrt(w0 * w0 + w1 * w1 + w2 * w2); }
};

std::vector<double> barrier_values(const ShiftedEnvelope& rho_r, const std::vector<double>& ts) {
  std::vector<double> b(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) b[k] = rho_r(ts[k]);
  return b;
}

}  // namespace

PathEnsemble sample_bessel3(double a, const PathConfig& cfg) {
  if (!(a >= 0.0)) throw DomainError("sample_bessel3: a must be nonnegative");
  PathEnsemble out;
  out.times = cfg.times();
  const std::size_t K = out.times.size();
  if (static_cast<double>(cfg.replicas) * static_cast<double>(K) > 5e7)
    throw ResourceError("sample_bessel3: ensemble too large to store; use the streaming estimators");
  out.paths.resize(static_cast<Eigen::Index>(cfg.replicas), static_cast<Eigen::Index>(K));
  out.weights.assign(cfg.replicas, 1.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "bessel");
    Bessel3 b(a);
    const auto row = static_cast<Eigen::Index>(r);
    out.paths(row, 0) = a;
    for (std::size_t k = 1; k < K; ++k) out.paths(row, static_cast<Eigen::Index>(k)) = b.step(g, out.times[k] - out.times[k - 1]);
  }
  return out;
}

PathEnsemble sample_conditioned_positive(double a, double t, const PathConfig& cfg_in) {
  if (!(a > 0.0) || !(t > 0.0)) throw DomainError("sample_conditioned_positive: need a > 0 and t > 0");
  const PathConfig cfg = with_horizon(cfg_in, t);
  const double p = stay_positive_prob(a, t);
  if (p < 1e-3) {
    PathEnsemble out = sample_bessel3(a, cfg);
    const auto last = out.paths.cols() - 1;
    for (std::size_t r = 0; r < cfg.replicas; ++r)
      out.weights[r] = a / (out.paths(static_cast<Eigen::Index>(r), last) * p);
    return out;
  }
  PathEnsemble out;
  out.times = cfg.times();
  const std::size_t K = out.times.size();
  if (static_cast<double>(cfg.replicas) * static_cast<double>(K) > 5e7)
    throw ResourceError("sample_conditioned_positive: ensemble too large to store");
  out.paths.resize(static_cast<Eigen::Index>(cfg.replicas), static_cast<Eigen::Index>(K));
  out.weights.assign(cfg.replicas, 1.0);
  const double max_attempts = 20.0 * static_cast<double>(cfg.replicas) / p + 1000.0;
  std::vector<double> path(K);
  std::size_t accepted = 0, attempt = 0;
  while (accepted < cfg.replicas) {
    if (static_cast<double>(attempt) > max_attempts)
      throw ResourceError("sample_conditioned_positive: acceptance starvation; use the weighted (Bessel) mode");
    NormalStream g(cfg.seed, attempt++, "conditioned");
    path[0] = a;
    bool alive = true;
    for (std::size_t k = 1; k < K && alive; ++k) {
      const double h = out.times[k] - out.times[k - 1];
      path[k] = path[k - 1] + std::sqrt(h) * g();
      alive = path[k] > 0.0 && g.uniform() < bridge_survival(path[k - 1], path[k], h);
    }
    if (!alive) continue;
    for (std::size_t k = 0; k < K; ++k) out.paths(static_cast<Eigen::Index>(accepted), static_cast<Eigen::Index>(k)) = path[k];
    ++accepted;
  }
  return out;
}

McEstimate mc_stay_positive(double a, double t, const PathConfig& cfg_in) {
  if (!(a >= 0.0) || !(t > 0.0)) throw DomainError("mc_stay_positive: need a >= 0 and t > 0");
  const PathConfig cfg = with_horizon(cfg_in, t);
  const std::vector<double> ts = cfg.times();
  std::vector<double> score(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    if (a == 0.0) continue;
    NormalStream g(cfg.seed, r, "stay-positive");
    double x = a, w = 1.0;
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double h = ts[k] - ts[k - 1];
      const double y = x + std::sqrt(h) * g();
      if (y <= 0.0) {
        w = 0.0;
        break;
      }
      w *= bridge_survival(x, y, h);
      x = y;
    }
    score[r] = w;
  }
  return mc_mean(score);
}

McEstimate mc_bridge_positive(double a, double b, double t, const PathConfig& cfg_in) {
  if (!(t > 0.0) || a < 0.0 || b < 0.0) throw DomainError("mc_bridge_positive: need a, b >= 0 and t > 0");
  const PathConfig cfg = with_horizon(cfg_in, t);
  const std::vector<double> ts = cfg.times();
  std::vector<double> score(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    if (a == 0.0 || b == 0.0) continue;
    NormalStream g(cfg.seed, r, "bridge");
    double x = a, w = 1.0;
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double h = ts[k] - ts[k - 1];
      const double rest = t - ts[k - 1];
      double y;
      if (k + 1 == ts.size()) {
        y = b;
      } else {
        y = x + (b - x) * h / rest + std::sqrt(h * (rest - h) / rest) * g();
      }
      if (y <= 0.0) {
        w = 0.0;
        break;
      }
      w *= bridge_survival(x, y, h);
      x = y;
    }
    score[r] = w;
  }
  return mc_mean(score);
}

McEstimate mc_below_line(double a, double b, const PathConfig& cfg) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("mc_below_line: a and b must be positive");
  const std::vector<double> ts = cfg.times();
  std::vector<double> score(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "below-line");
    double x = b, w = 1.0;  // distance to the line a s + b
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double h = ts[k] - ts[k - 1];
      const double y = x + a * h - std::sqrt(h) * g();
      if (y <= 0.0) {
        w = 0.0;
        break;
      }
      w *= bridge_survival(x, y, h);
      x = y;
    }
    score[r] = w;
  }
  return mc_mean(score);
}

DoobMcKeanCheck doob_mckean_check(double a, double t, double level, const PathConfig& cfg_in) {
  if (!(a > 0.0) || !(t > 0.0)) throw DomainError("doob_mckean_check: need a > 0 and t > 0");
  const PathConfig cfg = with_horizon(cfg_in, t);
  const std::vector<double> ts = cfg.times();
  std::vector<double> lhs(cfg.replicas, 0.0), rhs(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "doob-brownian");
    double x = a, w = 1.0;
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double h = ts[k] - ts[k - 1];
      const double y = x + std::sqrt(h) * g();
      if (y <= 0.0) {
        w = 0.0;
        break;
      }
      w *= bridge_survival(x, y, h);
      x = y;
    }
    if (w > 0.0 && x <= level) lhs[r] = (x / a) * w;
    NormalStream gb(cfg.seed, r, "doob-bessel");
    Bessel3 b(a);
    rhs[r] = b.step(gb, t) <= level ? 1.0 : 0.0;
  }
  return {mc_mean(lhs), mc_mean(rhs)};
}

double envelope_tail(const EnvelopeFn& rho, double T) {
  if (!(T > 0.0)) throw DomainError("envelope_tail: T must be positive");
  if (rho.identically_zero()) return 0.0;
  switch (rho.kind()) {
    case EnvelopeKind::Power:
      if (rho.exponent() >= 0.5) return std::numeric_limits<double>::infinity();
      return rho.scale() * std::pow(T, rho.exponent() - 0.5) / (0.5 - rho.exponent());
    case EnvelopeKind::SqrtLog: {
      if (rho.sign() > 0 || rho.exponent() <= 1.0) return std::numeric_limits<double>::infinity();
      boost::math::quadrature::exp_sinh<double> integrator;
      const double zeta = rho.exponent();
      const double v0 = std::log(T);
      auto g = [&](double v) {
        const double lg = (v > 40.0) ? v + std::log1p(2.0 * std::exp(-v)) : std::log(std::exp(v) + 2.0);
        return std::pow(lg, -zeta);
      };
      return rho.scale() * integrator.integrate([&](double s) { return g(v0 + s); }, 0.0,
                                                std::numeric_limits<double>::infinity());
    }
    case EnvelopeKind::Table: {
      if (!rho.tail()) return std::numeric_limits<double>::infinity();
      const TailModel tm = *rho.tail();
      if (tm.coefficient == 0.0) return 0.0;
      if (tm.exponent >= 0.5) return std::numeric_limits<double>::infinity();
      return tm.coefficient * std::pow(std::max(T, rho.table_u().back()), tm.exponent - 0.5) / (0.5 - tm.exponent);
    }
  }
  return std::numeric_limits<double>::infinity();
}

SurvivalEstimate envelope_survival_prob(double a, const ShiftedEnvelope& rho_r, const PathConfig& cfg) {
  if (!(a > 0.0)) throw DomainError("envelope_survival_prob: need a > rho_r(0) = 0");
  SurvivalEstimate out;
  out.horizon = cfg.horizon;
  out.tail = envelope_tail(rho_r.rho, cfg.horizon);
  if (rho_r.rho.identically_zero()) {
    out.estimate = {1.0, 0.0, cfg.replicas};
    return out;
  }
  const std::vector<double> ts = cfg.times();
  const std::vector<double> bar = barrier_values(rho_r, ts);
  std::vector<double> score(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "envelope");
    Bessel3 b(a);
    bool alive = true;
    for (std::size_t k = 1; k < ts.size() && alive; ++k) alive = b.step(g, ts[k] - ts[k - 1]) >= bar[k];
    score[r] = alive ? 1.0 : 0.0;
  }
  out.estimate = mc_mean(score);
  return out;
}

SurvivalEstimate conditioned_envelope_survival(double a, const ShiftedEnvelope& rho_r, double t, const PathConfig& cfg_in) {
  if (!(a > 0.0) || !(t > 0.0)) throw DomainError("conditioned_envelope_survival: need a > 0 and t > 0");
  const PathConfig cfg = with_horizon(cfg_in, t);
  SurvivalEstimate out;
  out.horizon = t;
  out.tail = envelope_tail(rho_r.rho, t);
  const std::vector<double> ts = cfg.times();
  const std::vector<double> bar = barrier_values(rho_r, ts);
  const double p = stay_positive_prob(a, t);
  std::vector<double> score(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "conditioned-envelope");
    Bessel3 b(a);
    bool alive = true;
    double beta = a;
    for (std::size_t k = 1; k < ts.size() && alive; ++k) {
      beta = b.step(g, ts[k] - ts[k - 1]);
      alive = beta >= bar[k];
    }
    score[r] = alive ? a / (beta * p) : 0.0;
  }
  out.estimate = mc_mean(score);
  return out;
}

BrownianSurvival brownian_envelope_survival(double a, const ShiftedEnvelope& rho_r, const PathConfig& cfg) {
  if (!(a > 0.0)) throw DomainError("brownian_envelope_survival: need a > 0");
  const std::vector<double> ts = cfg.times();
  const std::vector<double> bar = barrier_values(rho_r, ts);
  std::vector<double> prob(cfg.replicas, 0.0), endpoint(cfg.replicas, 0.0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    NormalStream g(cfg.seed, r, "brownian-envelope");
    double x = a;
    bool alive = true;
    for (std::size_t k = 1; k < ts.size() && alive; ++k) {
      x += std::sqrt(ts[k] - ts[k - 1]) * g();
      alive = x > bar[k];
    }
    if (alive) {
      prob[r] = 1.0;
      endpoint[r] = x;
    }
  }
  return {mc_mean(prob), mc_mean(endpoint)};
}

SurvivalEstimate eta_constant(double q, const EnvelopeFn& rho, double r, const PathConfig& cfg) {
  if (!(q > 0.0)) throw DomainError("eta_constant: q must be positive");
  if (!(r >= 0.0)) throw DomainError("eta_constant: r must be nonnegative");
  if (rho.identically_zero()) {
    SurvivalEstimate out;
    out.estimate = {q, 0.0, cfg.replicas};
    out.horizon = cfg.horizon;
    return out;
  }
  if (dvoretzky_erdos_test(rho).classification == DeClass::Diverges)
    throw ValidationError("eta_constant: rho fails the Dvoretzky-Erdos test, so eta(q, r) = 0");
  SurvivalEstimate s = envelope_survival_prob(q, ShiftedEnvelope{rho, r}, cfg);
  s.estimate.value *= q;
  s.estimate.se *= q;
  return s;
}

}  // namespace gmc
