#include "gmc/interp.hpp"

#include <algorithm>
#include <cmath>

#include "gmc/errors.hpp"

namespace gmc {

UniformPchip::UniformPchip(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), y_(std::move(values)) {
  const std::size_t n = y_.size();
  if (n < 2 || !(hi > lo)) throw ValidationError("UniformPchip: need >= 2 samples on a nonempty interval");
  step_ = (hi_ - lo_) / static_cast<double>(n - 1);
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / step_;
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = delta[i - 1], b = delta[i];
    if (a * b <= 0.0) {
      slope_[i] = 0.0;
    } else {
      // harmonic mean keeps the interpolant monotone on each interval
      slope_[i] = 2.0 * a * b / (a + b);
    }
  }
  // end slopes: one-sided, clipped for monotonicity
  for (std::size_t e : {std::size_t{0}, n - 1}) {
    const double d = (e == 0) ? delta[0] : delta[n - 2];
    if (slope_[e] * d <= 0.0) slope_[e] = 0.0;
    if (std::abs(slope_[e]) > 3.0 * std::abs(d)) slope_[e] = 3.0 * d;
  }
}

double UniformPchip::operator()(double x) const {
  if (x <= lo_) return y_.front();
  if (x >= hi_) return y_.back();
  const double s = (x - lo_) / step_;
  std::size_t i = static_cast<std::size_t>(s);
  if (i >= y_.size() - 1) i = y_.size() - 2;
  const double t = s - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h10 * step_ * slope_[i] + h01 * y_[i + 1] + h11 * step_ * slope_[i + 1];
}

UniformHermite::UniformHermite(double lo, double hi, std::vector<double> values, std::vector<double> derivs)
    : lo_(lo), hi_(hi), y_(std::move(values)), dy_(std::move(derivs)) {
  if (y_.size() < 2 || y_.size() != dy_.size() || !(hi > lo))
    throw ValidationError("UniformHermite: malformed table");
  step_ = (hi_ - lo_) / static_cast<double>(y_.size() - 1);
}

double UniformHermite::operator()(double x) const {
  if (x <= lo_) return y_.front();
  if (x >= hi_) return y_.back();
  const double s = (x - lo_) / step_;
  std::size_t i = static_cast<std::size_t>(s);
  if (i >= y_.size() - 1) i = y_.size() - 2;
  const double t = s - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h10 * step_ * dy_[i] + h01 * y_[i + 1] + h11 * step_ * dy_[i + 1];
}

double linear_interp(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size()) throw ValidationError("linear_interp: malformed table");
  if (x < xs.front() || x > xs.back()) throw RangeError("linear_interp: abscissa outside table range");
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  if (j == 0) return ys.front();
  const double x0 = xs[j - 1], x1 = xs[j];
  const double w = (x - x0) / (x1 - x0);
  return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

}  // namespace gmc
