#include "gmc/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "gmc/errors.hpp"
#include "gmc/interp.hpp"

namespace gmc {

namespace {

std::vector<double> probe_grid(double umax) {
  std::vector<double> g;
  for (int i = 0; i <= 200; ++i) g.push_back(0.05 * i);  // [0, 10]
  for (double u = 10.0; u < umax; u *= 1.1) g.push_back(u);
  if (std::isfinite(umax)) g.push_back(umax);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

EnvelopeFn EnvelopeFn::power(double gamma, double scale, double offset) {
  if (!std::isfinite(gamma) || !std::isfinite(scale) || gamma <= 0.0 || scale < 0.0)
    throw ValidationError("power envelope: need gamma > 0 and scale >= 0");
  if (!std::isfinite(offset) || offset < 0.0) throw ValidationError("power envelope: offset must be >= 0");
  EnvelopeFn f;
  f.kind_ = EnvelopeKind::Power;
  f.exponent_ = gamma;
  f.scale_ = scale;
  f.offset_ = offset;
  f.probe_shape();
  return f;
}

EnvelopeFn EnvelopeFn::sqrt_log(double zeta, int sign, double scale) {
  if (!std::isfinite(zeta) || zeta < 0.0 || (sign != 1 && sign != -1) || !std::isfinite(scale) || scale < 0.0)
    throw ValidationError("sqrtlog envelope: need zeta >= 0, sign in {-1, +1}, scale >= 0");
  EnvelopeFn f;
  f.kind_ = EnvelopeKind::SqrtLog;
  f.exponent_ = zeta;
  f.sign_ = sign;
  f.scale_ = scale;
  f.probe_shape();
  return f;
}

EnvelopeFn EnvelopeFn::table(std::vector<double> u, std::vector<double> rho, std::optional<TailModel> tail) {
  if (u.empty() || u.size() != rho.size()) throw ValidationError("table envelope: empty or mismatched samples");
  if (u.front() != 0.0) throw ValidationError("table envelope: first abscissa must be 0");
  if (rho.front() != 0.0) throw ValidationError("table envelope: rho(0) must be 0");
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (!(u[i] > u[i - 1])) throw ValidationError("table envelope: abscissae must be strictly increasing");
    if (rho[i] < rho[i - 1]) throw ValidationError("table envelope: values must be non-decreasing");
  }
  for (double v : rho)
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("table envelope: values must be finite and nonnegative");
  if (tail && (!std::isfinite(tail->exponent) || !std::isfinite(tail->coefficient) || tail->coefficient < 0.0))
    throw ValidationError("table envelope: malformed tail model");
  EnvelopeFn f;
  f.kind_ = EnvelopeKind::Table;
  f.u_ = std::move(u);
  f.rho_ = std::move(rho);
  f.tail_ = tail;
  f.probe_shape();
  return f;
}

double EnvelopeFn::domain_max() const {
  return kind_ == EnvelopeKind::Table ? u_.back() : std::numeric_limits<double>::infinity();
}

double EnvelopeFn::operator()(double u) const {
  if (!(u >= 0.0)) throw DomainError("envelope evaluated at negative or NaN argument");
  switch (kind_) {
    case EnvelopeKind::Power:
      if (scale_ == 0.0) return 0.0;
      if (offset_ == 0.0) return scale_ * std::pow(u, exponent_);
      return scale_ * (std::pow(u + offset_, exponent_) - std::pow(offset_, exponent_));
    case EnvelopeKind::SqrtLog:
      if (u == 0.0 || scale_ == 0.0) return 0.0;
      return scale_ * std::sqrt(u) * std::pow(std::log(u + 2.0), sign_ * exponent_);
    case EnvelopeKind::Table:
      return linear_interp(u_, rho_, u);
  }
  return 0.0;
}

void EnvelopeFn::probe_shape() {
  zero_at_origin_ = (*this)(0.0) == 0.0;
  std::vector<double> g = (kind_ == EnvelopeKind::Table) ? u_ : probe_grid(1e6);
  monotone_ = true;
  concave_ = true;
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = (*this)(g[i]);
  for (std::size_t i = 1; i < g.size(); ++i)
    if (v[i] < v[i - 1]) monotone_ = false;
  // midpoint concavity on neighbouring pairs and on (0, u) pairs
  auto tol = [](double a) { return 1e-12 * (1.0 + std::abs(a)); };
  for (std::size_t i = 0; i + 1 < g.size() && concave_; ++i) {
    const double m = 0.5 * (g[i] + g[i + 1]);
    if ((*this)(m) + tol(v[i + 1]) < 0.5 * (v[i] + v[i + 1])) concave_ = false;
  }
  for (std::size_t i = 1; i < g.size() && concave_; ++i) {
    const double m = 0.5 * g[i];
    if ((*this)(m) + tol(v[i]) < 0.5 * (v[0] + v[i])) concave_ = false;
  }
}

std::string EnvelopeFn::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case EnvelopeKind::Power:
      os << "power(gamma=" << exponent_ << ", scale=" << scale_;
      if (offset_ != 0.0) os << ", offset=" << offset_;
      os << ")";
      break;
    case EnvelopeKind::SqrtLog:
      os << "sqrtlog(zeta=" << exponent_ << ", sign=" << sign_ << ", scale=" << scale_ << ")";
      break;
    case EnvelopeKind::Table:
      os << "table(" << u_.size() << " samples, umax=" << u_.back() << ")";
      break;
  }
  return os.str();
}

double eval_rho(const EnvelopeFn& f, double u) { return f(u); }

double shifted_gap(const EnvelopeFn& f, double r, double u) {
  if (!(r >= 0.0) || !(u >= 0.0)) throw DomainError("shifted_gap: r and u must be nonnegative");
  if (u == 0.0) return 0.0;
  const double hi = f(u + r), lo = f(r);
  if (hi < lo) throw DomainError("shifted_gap: envelope decreases on [r, r+u]");
  return hi - lo;
}

DeResult dvoretzky_erdos_test(const EnvelopeFn& f, double tolerance) {
  switch (f.kind()) {
    case EnvelopeKind::Power: {
      if (f.scale() == 0.0) return {DeClass::Converges, 0.0};
      // (u + c)^g - c^g <= u^g for g <= 1, so the offset-free bound still holds
      if (f.exponent() < 0.5) return {DeClass::Converges, f.scale() / (0.5 - f.exponent())};
      return {DeClass::Diverges, std::numeric_limits<double>::infinity()};
    }
    case EnvelopeKind::SqrtLog: {
      if (f.scale() == 0.0) return {DeClass::Converges, 0.0};
      // integrand u^{-1} log(u+2)^{sign*zeta}: finite iff the log power is < -1
      if (f.sign() > 0 || f.exponent() <= 1.0) return {DeClass::Diverges, std::numeric_limits<double>::infinity()};
      // substitute u = e^v
      boost::math::quadrature::exp_sinh<double> integrator;
      const double zeta = f.exponent();
      auto g = [zeta](double v) {
        const double lg = (v > 40.0) ? v + std::log1p(2.0 * std::exp(-v)) : std::log(std::exp(v) + 2.0);
        return std::pow(lg, -zeta);
      };
      double err = 0.0;
      const double val = integrator.integrate(g, 0.0, std::numeric_limits<double>::infinity(),
                                              std::max(tolerance, 1e-14), &err);
      return {DeClass::Converges, f.scale() * (val + err)};
    }
    case EnvelopeKind::Table: {
      if (!f.tail()) throw InconclusiveError("dvoretzky_erdos_test: table envelope has no tail model");
      const auto& u = f.table_u();
      const auto& rho = f.table_rho();
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double a = std::max(u[i], 1.0), b = u[i + 1];
        if (b <= a) continue;
        const double s = (rho[i + 1] - rho[i]) / (u[i + 1] - u[i]);
        const double c = rho[i] - s * u[i];
        // int (c + s u) u^{-3/2} du
        total += c * 2.0 * (1.0 / std::sqrt(a) - 1.0 / std::sqrt(b)) + s * 2.0 * (std::sqrt(b) - std::sqrt(a));
      }
      const TailModel tm = *f.tail();
      const double start = std::max(u.back(), 1.0);
      if (tm.coefficient == 0.0) return {DeClass::Converges, total};
      if (tm.exponent >= 0.5) return {DeClass::Diverges, std::numeric_limits<double>::infinity()};
      total += tm.coefficient * std::pow(start, tm.exponent - 0.5) / (0.5 - tm.exponent);
      return {DeClass::Converges, total};
    }
  }
  throw ValidationError("dvoretzky_erdos_test: unknown envelope kind");
}

EnvelopeFn concave_majorant(const EnvelopeFn& samples) {
  if (samples.kind() != EnvelopeKind::Table) throw ValidationError("concave_majorant: expects a table envelope");
  const auto& u = samples.table_u();
  const auto& v = samples.table_rho();
  // upper hull, left to right; points exactly on a hull edge are kept
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < u.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (u[b] - u[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (u[i] - u[a]);
      const double scale = std::max({1.0, std::abs(v[i]), std::abs(v[a])}) * (u[i] - u[a]);
      if (cross > 1e-14 * scale) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::vector<double> hu, hv;
  for (std::size_t i : hull) {
    hu.push_back(u[i]);
    hv.push_back(v[i]);
  }
  return EnvelopeFn::table(std::move(hu), std::move(hv), samples.tail());
}

std::vector<std::string> envelope_warnings(const EnvelopeFn& f) {
  std::vector<std::string> out;
  if (!f.monotone()) out.push_back("envelope is not non-decreasing on the probe grid");
  if (!f.concave()) out.push_back("envelope is not concave on the probe grid; consider concave_majorant");
  const double probe = std::min(1e6, f.domain_max());
  if (probe > 16.0 && f(probe) < std::pow(probe, 0.25))
    out.push_back("envelope falls below u^{1/4} at large u");
  return out;
}

}  // namespace gmc
