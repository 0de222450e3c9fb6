#pragma once

#include <span>
#include <vector>

namespace gmc {

// Monotone cubic (Fritsch-Carlson / PCHIP) interpolant on a uniform grid over
// [lo, hi]. Outside the grid the end values are held.
class UniformPchip {
 public:
  UniformPchip() = default;
  UniformPchip(double lo, double hi, std::vector<double> values);

  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& values() const { return y_; }

 private:
  double lo_ = 0.0, hi_ = 1.0, step_ = 1.0;
  std::vector<double> y_, slope_;
};

// Cubic Hermite interpolant with caller-supplied derivatives on a uniform
// grid; used for running integrals whose integrand is known exactly.
class UniformHermite {
 public:
  UniformHermite() = default;
  UniformHermite(double lo, double hi, std::vector<double> values, std::vector<double> derivs);

  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_ = 0.0, hi_ = 1.0, step_ = 1.0;
  std::vector<double> y_, dy_;
};

// Piecewise-linear interpolation on sorted abscissae; throws RangeError
// outside [xs.front(), xs.back()].
double linear_interp(std::span<const double> xs, std::span<const double> ys, double x);

}  // namespace gmc
