#include "gmc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "gmc/errors.hpp"

namespace gmc {

namespace bq = boost::math::quadrature;

double bump_profile(BumpFamily family, double s) {
  s = std::abs(s);
  if (s >= 1.0) return 0.0;
  const double s2 = s * s;
  const double p = (family == BumpFamily::Exp) ? s2 : s2 * s2;
  return std::exp(-1.0 / (1.0 - p));
}

std::string to_string(BumpFamily family) { return family == BumpFamily::Exp ? "bump" : "flat-bump"; }

BumpFamily bump_family_from_string(const std::string& name) {
  if (name == "bump") return BumpFamily::Exp;
  if (name == "flat-bump") return BumpFamily::FlatExp;
  throw ValidationError("unknown bump family '" + name + "' (expected bump or flat-bump)");
}

namespace {

// Integral of b(|z|) b(|r e1 - z|) over R^d for b(s) = profile(s / radius).
double radial_self_convolution(BumpFamily bump, int d, double radius, double r, double tol) {
  if (r >= 2.0 * radius) return 0.0;
  auto b = [&](double s) { return bump_profile(bump, s / radius); };
  double err = 0.0;
  if (d == 1) {
    auto f = [&](double u) { return b(u) * b(r - u); };
    const double v = bq::gauss_kronrod<double, 31>::integrate(f, r - radius, radius, 15, tol, &err);
    return v;
  }
  // polar coordinates around the origin; inner angle restricted to the overlap
  auto inner = [&](double rho) {
    if (rho <= 0.0) return 2.0 * std::numbers::pi * b(r);
    double c = (r * r + rho * rho - radius * radius) / (2.0 * r * rho);
    if (r == 0.0) c = (rho < radius) ? -1.0 : 1.0;
    if (c >= 1.0) return 0.0;
    const double theta_max = (c <= -1.0) ? std::numbers::pi : std::acos(c);
    auto g = [&](double th) { return b(std::sqrt(std::max(0.0, r * r + rho * rho - 2.0 * r * rho * std::cos(th)))); };
    double e = 0.0;
    return 2.0 * bq::gauss_kronrod<double, 21>::integrate(g, 0.0, theta_max, 12, tol, &e);
  };
  auto outer = [&](double rho) { return rho * b(rho) * inner(rho); };
  const double lo = std::max(0.0, r - radius);
  return bq::gauss_kronrod<double, 31>::integrate(outer, lo, radius, 15, tol, &err);
}

std::mutex kappa_cache_mutex;
std::map<std::tuple<int, int, std::size_t>, SmoothingKernel> kappa_cache;

}  // namespace

double SmoothingKernel::self_convolution(BumpFamily bump, int d, double r, double tol) {
  if (d != 1 && d != 2) throw ValidationError("smoothing kernel: dimension must be 1 or 2");
  return radial_self_convolution(bump, d, 0.5, std::abs(r), tol);
}

double SmoothingKernel::operator()(double r) const {
  r = std::abs(r);
  if (r >= 1.0) return 0.0;
  return std::max(0.0, table_(r));
}

double SmoothingKernel::fourier(double xi) const {
  xi = std::abs(xi);
  const int pieces = std::max(1, static_cast<int>(std::ceil(4.0 * xi / std::numbers::pi)));
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = static_cast<double>(i) / pieces, b = static_cast<double>(i + 1) / pieces;
    if (d_ == 1) {
      auto f = [&](double r) { return (*this)(r) * std::cos(xi * r); };
      total += 2.0 * bq::gauss<double, 20>::integrate(f, a, b);
    } else {
      auto f = [&](double r) { return (*this)(r) * boost::math::cyl_bessel_j(0, xi * r) * r; };
      total += 2.0 * std::numbers::pi * bq::gauss<double, 20>::integrate(f, a, b);
    }
  }
  return total;
}

SmoothingKernel build_smoothing_kernel(BumpFamily bump, int d, std::size_t samples) {
  if (d != 1 && d != 2) throw ValidationError("smoothing kernel: dimension must be 1 or 2");
  if (samples < 16) throw ValidationError("smoothing kernel: need at least 16 samples");
  const auto key = std::make_tuple(static_cast<int>(bump), d, samples);
  {
    std::lock_guard<std::mutex> lock(kappa_cache_mutex);
    auto it = kappa_cache.find(key);
    if (it != kappa_cache.end()) return it->second;
  }
  std::vector<double> v(samples);
  const double norm = SmoothingKernel::self_convolution(bump, d, 0.0, 1e-13);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("smoothing kernel: normalisation failed");
  for (std::size_t i = 0; i < samples; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(samples - 1);
    v[i] = (i + 1 == samples) ? 0.0 : SmoothingKernel::self_convolution(bump, d, r, 1e-12) / norm;
  }
  v[0] = 1.0;
  SmoothingKernel k;
  k.d_ = d;
  k.bump_ = bump;
  k.table_ = UniformPchip(0.0, 1.0, std::move(v));
  std::lock_guard<std::mutex> lock(kappa_cache_mutex);
  kappa_cache.emplace(key, k);
  return k;
}

double solve_tprime(double eta1, double eta2, double t) {
  if (!(t >= 0.0)) throw DomainError("solve_tprime: t must be nonnegative");
  if (eta1 == 0.0 || t == 0.0) return t;
  auto f = [&](double s) { return s - (eta1 / eta2) * (-std::expm1(-eta2 * s)) - t; };
  double lo = t, hi = t + eta1 / eta2;
  double x = hi;
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) hi = x; else lo = x;
    const double dfx = 1.0 - eta1 * std::exp(-eta2 * x);
    double next = (dfx > 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-13 * std::max(1.0, x)) return next;
    x = next;
  }
  return 0.5 * (lo + hi);
}

StarScaleKernel::StarScaleKernel(double eta1, double eta2, SmoothingKernel kappa)
    : eta1_(eta1), eta2_(eta2), kappa_(std::make_shared<const SmoothingKernel>(std::move(kappa))) {
  if (!(eta1 >= 0.0 && eta1 <= 1.0)) throw ValidationError("kernel: eta1 must lie in [0, 1]");
  if (!(eta2 > 0.0) || !std::isfinite(eta2)) throw ValidationError("kernel: eta2 must be positive");
  const std::size_t n = 10241;  // step 1/256 on [0, 40]
  const double h = vmax_ / static_cast<double>(n - 1);
  const SmoothingKernel& kap = *kappa_;
  auto g = [&](double w) { return kap(std::exp(-w)); };
  std::vector<double> F(n), dF(n), H(n), dH(n);
  F[0] = H[0] = 0.0;
  const double decay = std::exp(-eta2_ * h);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = h * static_cast<double>(i), b = a + h;
    F[i + 1] = F[i] + bq::gauss<double, 15>::integrate(g, a, b);
    auto gh = [&](double w) { return std::exp(-eta2_ * (b - w)) * g(w); };
    H[i + 1] = decay * H[i] + bq::gauss<double, 15>::integrate(gh, a, b);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = h * static_cast<double>(i);
    dF[i] = g(v);
    dH[i] = g(v) - eta2_ * H[i];
  }
  F_end_ = F.back();
  H_end_ = H.back();
  F_ = std::make_shared<const UniformHermite>(0.0, vmax_, std::move(F), std::move(dF));
  H_ = std::make_shared<const UniformHermite>(0.0, vmax_, std::move(H), std::move(dH));
}

double StarScaleKernel::running_F(double v) const {
  if (v <= vmax_) return (*F_)(v);
  return F_end_ + (v - vmax_);
}

double StarScaleKernel::running_H(double v) const {
  if (v <= vmax_) return (*H_)(v);
  const double inf = 1.0 / eta2_;
  return inf + (H_end_ - inf) * std::exp(-eta2_ * (v - vmax_));
}

double StarScaleKernel::scale_density(double t, double r) const { return (*kappa_)(std::exp(tprime(t)) * r); }

double StarScaleKernel::kbar(double t, double r) const { return kbar_tp(t, tprime(t), r); }

double StarScaleKernel::kbar_tp(double t, double tp, double r) const {
  r = std::abs(r);
  if (r == 0.0) return t;
  if (r >= 1.0 || t == 0.0) return 0.0;
  const double L = -std::log(r);
  const double m = std::max(L - tp, 0.0);
  double v = running_F(L) - running_F(m);
  if (eta1_ != 0.0) v -= eta1_ * (running_H(L) - std::exp(-eta2_ * (L - m)) * running_H(m));
  return std::clamp(v, 0.0, std::min(t, L));
}

double StarScaleKernel::k_infinity(double r) const {
  r = std::abs(r);
  if (r == 0.0) throw DomainError("K(x, y) is singular on the diagonal");
  if (r >= 1.0) return 0.0;
  const double L = -std::log(r);
  return std::max(0.0, running_F(L) - eta1_ * running_H(L));
}

double StarScaleKernel::support_radius(double t) const { return std::exp(-tprime(t)); }

double eval_scale_density(const StarScaleKernel& k, double t, const Point& x, const Point& y) {
  if (!(t >= 0.0)) throw DomainError("scale density: t must be nonnegative");
  return k.scale_density(t, distance(x, y));
}

namespace {

double kbar_quadrature(const StarScaleKernel& k, double tp, double r) {
  const double upper = std::min(tp, -std::log(r));
  if (upper <= 0.0) return 0.0;
  const double e1 = k.eta1(), e2 = k.eta2();
  const SmoothingKernel& kap = k.kappa();
  auto f = [&](double s) { return (1.0 - e1 * std::exp(-e2 * s)) * kap(std::exp(s) * r); };
  double err = 0.0;
  const double v = bq::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 20, 1e-11, &err);
  if (!std::isfinite(v) || err > 1e-7 * std::max(1.0, std::abs(v)))
    throw NumericError("eval_kbar: quadrature did not converge (r=" + std::to_string(r) + ")");
  return v;
}

}  // namespace

double eval_kbar(const StarScaleKernel& k, double t, const Point& x, const Point& y) {
  if (!(t >= 0.0)) throw DomainError("eval_kbar: t must be nonnegative");
  const double r = distance(x, y);
  if (r == 0.0) return t;
  if (r >= 1.0 || t == 0.0) return 0.0;
  return kbar_quadrature(k, k.tprime(t), r);
}

KInfinityValue eval_k_infinity(const StarScaleKernel& k, const Point& x, const Point& y, std::optional<double> t_max) {
  const double r = distance(x, y);
  if (r == 0.0) throw DomainError("eval_k_infinity: K is singular at x = y");
  if (r >= 1.0) return {0.0, t_max.value_or(0.0)};
  const double L = -std::log(r);
  // the t with t' = L, plus a margin
  const double needed = L - (k.eta1() / k.eta2()) * (-std::expm1(-k.eta2() * L)) + 1.0;
  const double t = std::max(t_max.value_or(0.0), needed);
  return {kbar_quadrature(k, k.tprime(t), r), t};
}

}  // namespace gmc
