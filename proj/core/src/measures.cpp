#include "gmc/measures.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gmc/errors.hpp"
#include "gmc/rng.hpp"

namespace gmc {

double neumaier_sum(std::span<const double> xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
      c += (s - t) + x;
    } else {
      c += (x - t) + s;
    }
    s = t;
  }
  return s + c;
}

double ReferenceMeasure::mass(std::span<const std::size_t> subset) const {
  std::vector<double> w;
  w.reserve(subset.size());
  for (std::size_t i : subset) w.push_back(weights.at(i));
  return neumaier_sum(w);
}

namespace {

void set_box(ReferenceMeasure& mu) {
  if (mu.points.empty()) return;
  mu.box_lo = mu.box_hi = mu.points.front();
  for (const Point& p : mu.points)
    for (int k = 0; k < 2; ++k) {
      mu.box_lo[k] = std::min(mu.box_lo[k], p[k]);
      mu.box_hi[k] = std::max(mu.box_hi[k], p[k]);
    }
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

double pair_kernel(double r, int d, const EnvelopeFn& rho) {
  return 1.0 / (std::pow(r, d) * std::exp(rho(std::log(1.0 / r))));
}

}  // namespace

ReferenceMeasure build_lebesgue(const Box& box, double h) {
  if (box.d != 1 && box.d != 2) throw ValidationError("lebesgue: dimension must be 1 or 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("lebesgue: resolution must be positive");
  std::size_t counts[2] = {1, 1};
  for (int k = 0; k < box.d; ++k) {
    const double side = box.hi[k] - box.lo[k];
    if (!(side > 0.0)) throw ValidationError("lebesgue: empty box");
    const double q = side / h;
    const double m = std::round(q);
    if (m < 1.0 || std::abs(q - m) > 1e-9 * q) throw ValidationError("lebesgue: resolution must divide the box sides");
    if (m > static_cast<double>(kMaxAtoms)) throw ResourceError("lebesgue: more than 4096 atoms");
    counts[k] = static_cast<std::size_t>(m);
  }
  if (counts[0] * counts[1] > kMaxAtoms) throw ResourceError("lebesgue: more than 4096 atoms");
  ReferenceMeasure mu;
  mu.d = box.d;
  mu.scheme = "lebesgue";
  const double w = std::pow(h, box.d);
  for (std::size_t i = 0; i < counts[0]; ++i)
    for (std::size_t j = 0; j < counts[1]; ++j) {
      Point p{box.lo[0] + (static_cast<double>(i) + 0.5) * h, 0.0};
      if (box.d == 2) p[1] = box.lo[1] + (static_cast<double>(j) + 0.5) * h;
      mu.points.push_back(p);
      mu.weights.push_back(w);
    }
  mu.total_mass = neumaier_sum(mu.weights);
  mu.box_lo = box.lo;
  mu.box_hi = box.hi;
  if (box.d == 1) mu.box_lo[1] = mu.box_hi[1] = 0.0;
  mu.metadata["resolution"] = num(h);
  return mu;
}

std::vector<double> cantor_gaps(const CantorSpec& spec) {
  if (spec.level < 0) throw ValidationError("cantor: level must be >= 0");
  std::vector<double> a;
  for (int k = 1; k <= spec.level; ++k) {
    const double step = spec.schedule(k) - spec.schedule(k - 1);
    const double ak = -std::expm1(-step);
    if (!(ak >= 0.0 && ak < 0.5)) {
      std::ostringstream os;
      os << "cantor: gap fraction a_" << k << " = " << ak << " is outside [0, 1/2)";
      throw ValidationError(os.str());
    }
    a.push_back(ak);
  }
  return a;
}

std::vector<double> cantor_diameters(const CantorSpec& spec) {
  std::vector<double> d;
  for (int k = 0; k <= spec.level; ++k) d.push_back(std::ldexp(std::exp(-spec.schedule(k)), -k));
  return d;
}

ReferenceMeasure build_cantor(const CantorSpec& spec) {
  if (spec.level > kMaxCantorLevel) throw ResourceError("cantor: level above 14 exceeds the atom cap");
  const std::vector<double> a = cantor_gaps(spec);
  // left endpoints of the level-k intervals; lengths follow D_k = D_{k-1} (1 - a_k) / 2
  std::vector<double> left{0.0};
  double len = 1.0;
  for (int k = 1; k <= spec.level; ++k) {
    const double step = spec.schedule(k) - spec.schedule(k - 1);
    const double child = 0.5 * len * std::exp(-step);
    std::vector<double> next;
    next.reserve(left.size() * 2);
    for (double l : left) {
      next.push_back(l);
      next.push_back(l + len - child);
    }
    left.swap(next);
    len = child;
  }
  ReferenceMeasure mu;
  mu.d = 1;
  mu.scheme = "cantor";
  const double w = std::ldexp(1.0, -spec.level);
  for (double l : left) {
    mu.points.push_back({l + 0.5 * len, 0.0});
    mu.weights.push_back(w);
  }
  mu.total_mass = neumaier_sum(mu.weights);
  mu.box_lo = {0.0, 0.0};
  mu.box_hi = {1.0, 0.0};
  mu.metadata["level"] = std::to_string(spec.level);
  mu.metadata["schedule"] = spec.schedule.describe();
  mu.metadata["diameter"] = num(len);
  return mu;
}

ReferenceMeasure build_occupation(double T, double dt, std::uint64_t seed, int d) {
  if (d != 1 && d != 2) throw ValidationError("occupation: dimension must be 1 or 2");
  if (!(T > 0.0) || !(dt > 0.0)) throw ValidationError("occupation: T and dt must be positive");
  const double q = T / dt;
  const double kf = std::floor(q + 1e-9);
  if (kf > static_cast<double>(kMaxAtoms)) throw ResourceError("occupation: more than 4096 atoms");
  const auto K = static_cast<std::size_t>(kf);
  ReferenceMeasure mu;
  mu.d = d;
  mu.scheme = "occupation";
  NormalStream g(seed, 0, "occupation");
  Point p{0.0, 0.0};
  const double s = std::sqrt(dt);
  for (std::size_t k = 0; k < K; ++k) {
    mu.points.push_back(p);
    mu.weights.push_back(dt);
    p[0] += s * g();
    if (d == 2) p[1] += s * g();
  }
  mu.total_mass = neumaier_sum(mu.weights);
  set_box(mu);
  mu.metadata["T"] = num(T);
  mu.metadata["dt"] = num(dt);
  mu.metadata["seed"] = std::to_string(seed);
  return mu;
}

std::vector<double> local_potentials(const ReferenceMeasure& mu, const EnvelopeFn& rho) {
  const std::size_t n = mu.size();
  std::vector<double> pot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = distance(mu.points[i], mu.points[j]);
      if (r == 0.0) throw ValidationError("capacity: coincident atoms");
      if (r > 1.0) continue;
      const double k = pair_kernel(r, mu.d, rho);
      pot[i] += mu.weights[j] * k;
      pot[j] += mu.weights[i] * k;
    }
  return pot;
}

double capacity_integral(const ReferenceMeasure& mu, const EnvelopeFn& rho) {
  const std::vector<double> pot = local_potentials(mu, rho);
  std::vector<double> terms(pot.size());
  for (std::size_t i = 0; i < pot.size(); ++i) terms[i] = mu.weights[i] * pot[i];
  return neumaier_sum(terms);
}

CapacityBracket cantor_capacity_bounds(const CantorSpec& spec, double alpha, int n_max, double tol) {
  if (!(alpha >= 0.0)) throw ValidationError("cantor_capacity_bounds: alpha must be >= 0");
  if (n_max < 1) throw ValidationError("cantor_capacity_bounds: n_max must be >= 1");
  const EnvelopeFn& th = spec.schedule;
  auto a_of = [&](int n) { return -std::expm1(-(th(n) - th(n - 1))); };
  // f(r) = 1 / (r e^{alpha theta(log 1/r)}), in logs
  auto log_f = [&](double log_inv_r) { return log_inv_r - alpha * th(std::max(0.0, log_inv_r)); };
  auto level_bounds = [&](int n, double& lo, double& hi) {
    // log(1/d_{n-1}) = (n-1) log 2 + theta(n-1); the closest pair adds log(1/a_n)
    const double L_far = (n - 1) * std::numbers::ln2 + th(n - 1);
    const double an = a_of(n);
    if (!(an > 0.0)) {
      lo = 0.0;
      hi = std::numeric_limits<double>::infinity();
      return;
    }
    const double L_near = L_far - std::log(an);
    // theta concave makes log_f convex: the maximum sits at an end, the
    // minimum may be interior
    const double fmax = std::max(log_f(L_far), log_f(L_near));
    double fmin = std::min(log_f(L_far), log_f(L_near));
    if (L_near > L_far) {
      const auto inner = boost::math::tools::brent_find_minima(log_f, L_far, L_near, 52);
      fmin = std::min(fmin, inner.second);
    }
    const double w = -n * std::numbers::ln2;
    lo = std::exp(w + fmin);
    hi = std::exp(w + fmax);
  };
  CapacityBracket out;
  for (int n = 1; n <= n_max; ++n) {
    double lo, hi;
    level_bounds(n, lo, hi);
    out.lower += lo;
    out.upper += hi;
  }
  // continue the upper series in doubling windows until the window is negligible
  double total = out.upper;
  int n = n_max;
  const int limit = 1 << 20;
  while (n < limit) {
    const double before = total;
    double window = 0.0;
    const int end = 2 * n;
    for (int k = n + 1; k <= end; ++k) {
      double lo, hi;
      level_bounds(k, lo, hi);
      window += hi;
    }
    total += window;
    n = end;
    if (!std::isfinite(total)) break;
    if (window <= tol * total) {
      out.converged = true;
      break;
    }
    // a window outweighing everything before it: the terms are not summable
    if (n >= 1024 && window > before) break;
  }
  out.upper_total = total;
  out.levels_used = static_cast<std::size_t>(n);
  out.regular_variation_family =
      (th.kind() == EnvelopeKind::Power && th.exponent() == 0.5) || th.kind() == EnvelopeKind::SqrtLog;
  return out;
}

ReferenceMeasure restrict_to_regular_part(const ReferenceMeasure& mu, const EnvelopeFn& rho, double threshold) {
  ReferenceMeasure out;
  out.d = mu.d;
  out.scheme = mu.scheme;
  out.metadata = mu.metadata;
  out.metadata["regular_part_threshold"] = num(threshold);
  if (std::isinf(threshold) && threshold > 0) {
    out.points = mu.points;
    out.weights = mu.weights;
  } else {
    const std::vector<double> pot = local_potentials(mu, rho);
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (pot[i] <= threshold) {
        out.points.push_back(mu.points[i]);
        out.weights.push_back(mu.weights[i]);
      }
  }
  out.total_mass = neumaier_sum(out.weights);
  out.box_lo = mu.box_lo;
  out.box_hi = mu.box_hi;
  return out;
}

void write_atoms_csv(const ReferenceMeasure& mu, std::ostream& os) {
  os << (mu.d == 2 ? "x,y,weight\n" : "x,weight\n");
  os << std::setprecision(17);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    os << mu.points[i][0] << ',';
    if (mu.d == 2) os << mu.points[i][1] << ',';
    os << mu.weights[i] << '\n';
  }
}

}  // namespace gmc
