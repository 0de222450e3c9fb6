#include "gmc/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gmc/errors.hpp"

namespace gmc {

namespace bq = boost::math::quadrature;

namespace {

double unit_mass(BumpFamily family, int d) {
  double err = 0.0;
  if (d == 1) {
    auto f = [&](double s) { return bump_profile(family, s); };
    return 2.0 * bq::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-14, &err);
  }
  auto f = [&](double s) { return bump_profile(family, s) * s; };
  return 2.0 * std::numbers::pi * bq::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-14, &err);
}

double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  static thread_local bq::tanh_sinh<double> integrator(12);
  double err = 0.0;
  const double v = integrator.integrate(f, a, b, tol, &err);
  if (!std::isfinite(v)) throw NumericError("radial convolution: quadrature produced a non-finite value");
  return v;
}

struct PhiEntry {
  double norm, mass_error;
  std::shared_ptr<const UniformPchip> phi;
};
std::mutex phi_cache_mutex;
std::map<std::pair<int, int>, PhiEntry> phi_cache;

}  // namespace

Mollifier::Mollifier(BumpFamily family, int d, double eps) : family_(family), d_(d), eps_(eps) {
  if (d != 1 && d != 2) throw ValidationError("mollifier: dimension must be 1 or 2");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("mollifier: eps must lie in (0, 1)");
  std::lock_guard<std::mutex> lock(phi_cache_mutex);
  auto key = std::make_pair(static_cast<int>(family), d);
  auto it = phi_cache.find(key);
  if (it != phi_cache.end()) {
    norm_ = it->second.norm;
    phi_ = it->second.phi;
    mass_error_ = it->second.mass_error;
    return;
  }
  norm_ = 1.0 / unit_mass(family, d);
  const std::size_t n = 4096;
  std::vector<double> v(n);
  auto th = [this](double s) { return theta(s); };
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = (i + 1 == n) ? 0.0 : radial_convolve(d_, th, 1.0, th, r, 1e-11);
  }
  phi_ = std::make_shared<const UniformPchip>(0.0, 2.0, std::move(v));
  // theta * theta carries the product of the two unit masses
  double err = 0.0;
  auto f = [&](double s) { return (d_ == 1 ? 2.0 : 2.0 * std::numbers::pi * s) * phi(s); };
  mass_error_ = bq::gauss_kronrod<double, 31>::integrate(f, 0.0, 2.0, 15, 1e-12, &err) - 1.0;
  if (std::abs(mass_error_) > 1e-6) throw NumericError("mollifier: theta * theta does not have unit mass");
  phi_cache.emplace(key, PhiEntry{norm_, mass_error_, phi_});
}

double Mollifier::theta(double r) const { return norm_ * bump_profile(family_, r); }

double Mollifier::theta_eps(double r) const { return theta(r / eps_) / std::pow(eps_, d_); }

double Mollifier::phi(double r) const {
  r = std::abs(r);
  if (r >= 2.0) return 0.0;
  return std::max(0.0, (*phi_)(r));
}

double Mollifier::phi_eps(double r) const { return phi(r / eps_) / std::pow(eps_, d_); }

double radial_convolve(int d, const std::function<double(double)>& h, double R,
                       const std::function<double(double)>& g, double r, double tol) {
  r = std::abs(r);
  if (d == 1) {
    // int h(|u|) g(|r - u|) du over [-R, R], split where g is singular
    auto f = [&](double u) { return h(std::abs(u)) * g(std::abs(r - u)); };
    double total = 0.0;
    std::vector<double> cuts{-R};
    if (0.0 > -R && 0.0 < R) cuts.push_back(0.0);
    if (r < R && r > 0.0) cuts.push_back(r);
    cuts.push_back(R);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += tanh_sinh(f, cuts[i], cuts[i + 1], tol);
    return total;
  }
  // polar coordinates around the point r e1, where g(|.|) is centred
  auto inner = [&](double rho) {
    double c;
    if (r == 0.0) {
      c = (rho < R) ? -2.0 : 2.0;
    } else {
      c = (r * r + rho * rho - R * R) / (2.0 * r * rho);
    }
    if (c >= 1.0) return 0.0;
    if (r == 0.0) return 2.0 * std::numbers::pi * h(rho);
    const double theta_max = (c <= -1.0) ? std::numbers::pi : std::acos(c);
    auto f = [&](double th) {
      return h(std::sqrt(std::max(0.0, r * r + rho * rho - 2.0 * r * rho * std::cos(th))));
    };
    double err = 0.0;
    return 2.0 * bq::gauss_kronrod<double, 21>::integrate(f, 0.0, theta_max, 10, tol, &err);
  };
  auto outer = [&](double rho) { return rho * g(rho) * inner(rho); };
  const double lo = std::max(0.0, r - R), hi = r + R;
  if (lo < r && r > 0.0 && r < hi) return tanh_sinh(outer, lo, r, tol) + tanh_sinh(outer, r, hi, tol);
  return tanh_sinh(outer, lo, hi, tol);
}

namespace {

double mollify(const Mollifier& m, bool twice, const std::function<double(double)>& g, double r) {
  const double eps = m.eps();
  if (twice) {
    auto h = [&](double s) { return m.phi_eps(s); };
    return radial_convolve(m.dimension(), h, 2.0 * eps, g, r);
  }
  auto h = [&](double s) { return m.theta_eps(s); };
  return radial_convolve(m.dimension(), h, eps, g, r);
}

void check_dims(const StarScaleKernel& k, const Mollifier& m) {
  if (k.dimension() != m.dimension()) throw ValidationError("mollified covariance: kernel and mollifier dimensions differ");
}

}  // namespace

double eval_mollified_cov(const StarScaleKernel& k, const Mollifier& m, std::optional<double> t, const Point& x,
                          const Point& y, MollifiedKind kind) {
  check_dims(k, m);
  const double r = distance(x, y);
  const double reach = (kind == MollifiedKind::Cross ? 1.0 : 2.0) * m.eps();
  if (r >= 1.0 + reach) return 0.0;
  if (!t) {
    if (kind != MollifiedKind::Full) throw UsageError("eval_mollified_cov: scale-truncated kinds need t");
    auto g = [&](double s) { return s == 0.0 ? 0.0 : k.k_infinity(s); };
    return mollify(m, true, g, r);
  }
  if (!(*t >= 0.0)) throw DomainError("eval_mollified_cov: t must be nonnegative");
  if (kind == MollifiedKind::Full) throw UsageError("eval_mollified_cov: K_eps takes no t");
  const double tp = k.tprime(*t);
  auto g = [&](double s) { return k.kbar_tp(*t, tp, s); };
  return mollify(m, kind == MollifiedKind::Scale, g, r);
}

double mollified_increment(const StarScaleKernel& k, const Mollifier& m, double ta, double tb, double r, bool cross) {
  check_dims(k, m);
  const double ta_p = k.tprime(ta), tb_p = k.tprime(tb);
  const double reach = (cross ? 1.0 : 2.0) * m.eps();
  if (r >= std::exp(-ta_p) + reach) return 0.0;
  auto g = [&](double s) { return k.kbar_tp(tb, tb_p, s) - k.kbar_tp(ta, ta_p, s); };
  return mollify(m, !cross, g, r);
}

double mollified_remainder(const StarScaleKernel& k, const Mollifier& m, double T, double r) {
  check_dims(k, m);
  const double Tp = k.tprime(T);
  if (r >= std::exp(-Tp) + 2.0 * m.eps()) return 0.0;
  auto g = [&](double s) { return s == 0.0 ? 0.0 : k.k_infinity(s) - k.kbar_tp(T, Tp, s); };
  return mollify(m, true, g, r);
}

LogBoundReport check_log_bound(const StarScaleKernel& k, const Mollifier& m, const std::vector<double>& separations,
                               const std::vector<double>& ts) {
  LogBoundReport rep;
  const Point o{0.0, 0.0};
  for (double t : ts) {
    for (double r : separations) {
      const Point p{r, 0.0};
      const double plain = std::min(t, std::max(0.0, -std::log(std::max(r, 1e-300))));
      const double smooth = std::min(t, std::max(0.0, -std::log(std::max(r, m.eps()))));
      const double kb = (r == 0.0) ? t : k.kbar(t, r);
      rep.kbar = std::max(rep.kbar, std::abs(kb - (r == 0.0 ? t : plain)));
      rep.kt = rep.kbar;
      rep.kt_eps = std::max(rep.kt_eps, std::abs(eval_mollified_cov(k, m, t, o, p, MollifiedKind::Scale) - smooth));
      rep.kbar_cross =
          std::max(rep.kbar_cross, std::abs(eval_mollified_cov(k, m, t, o, p, MollifiedKind::Cross) - smooth));
      ++rep.probes;
    }
  }
  return rep;
}

}  // namespace gmc
