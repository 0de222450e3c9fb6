#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmc/interp.hpp"

namespace gmc {

// Points live in R^d with d in {1, 2}; the second coordinate is zero in 1-d.
using Point = std::array<double, 2>;

inline double distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dy == 0.0 ? (dx < 0 ? -dx : dx) : std::sqrt(dx * dx + dy * dy);
}

// Smooth radial bump profiles on [0, 1), vanishing with all derivatives at 1.
//   Exp:     exp(-1 / (1 - s^2))
//   FlatExp: exp(-1 / (1 - s^4))
enum class BumpFamily { Exp, FlatExp };

double bump_profile(BumpFamily family, double s);
std::string to_string(BumpFamily family);
BumpFamily bump_family_from_string(const std::string& name);

// kappa: the normalised self-convolution b * b of a radial bump b supported in
// the ball of radius 1/2, so kappa(0) = 1, supp kappa in B(0, 1) and its
// Fourier transform |b^|^2 is nonnegative. Stored as a radial table on [0, 1].
class SmoothingKernel {
 public:
  SmoothingKernel() = default;

  double operator()(double r) const;  // radial profile, 0 for r >= 1
  int dimension() const { return d_; }
  BumpFamily bump() const { return bump_; }
  std::size_t samples() const { return table_.values().size(); }

  // Radial Fourier transform of kappa at frequency |xi|, by quadrature.
  double fourier(double xi) const;

  // Unnormalised (b * b)(r) by direct quadrature; the construction reference.
  static double self_convolution(BumpFamily bump, int d, double r, double tol = 1e-12);

 private:
  friend SmoothingKernel build_smoothing_kernel(BumpFamily, int, std::size_t);
  int d_ = 1;
  BumpFamily bump_ = BumpFamily::Exp;
  UniformPchip table_;
};

SmoothingKernel build_smoothing_kernel(BumpFamily bump, int d, std::size_t samples = 4096);

// Unique root t' >= 0 of t' - (eta1/eta2)(1 - exp(-eta2 t')) = t.
double solve_tprime(double eta1, double eta2, double t);

// Almost star-scale invariant covariance with K_0 = 0:
//   Kbar_t(x, y) = int_0^{t'} (1 - eta1 e^{-eta2 s}) kappa(e^s (x - y)) ds.
//
// Fast evaluation goes through two running integrals in w = log(1/r) - s,
//   F(v) = int_0^v kappa(e^{-w}) dw,
//   H(v) = int_0^v e^{-eta2 (v - w)} kappa(e^{-w}) dw,
// tabulated once with exact-derivative Hermite interpolation, so that
//   Kbar_t(r) = F(L) - F(m) - eta1 (H(L) - e^{-eta2 (L - m)} H(m)),
// with L = log(1/r) and m = max(L - t', 0).
class StarScaleKernel {
 public:
  StarScaleKernel(double eta1, double eta2, SmoothingKernel kappa);

  double eta1() const { return eta1_; }
  double eta2() const { return eta2_; }
  int dimension() const { return kappa_->dimension(); }
  const SmoothingKernel& kappa() const { return *kappa_; }

  double tprime(double t) const { return solve_tprime(eta1_, eta2_, t); }

  // Q_t at separation r.
  double scale_density(double t, double r) const;

  // Kbar_t(r) (tabulated route). Exactly t on the diagonal, 0 for r >= 1.
  double kbar(double t, double r) const;
  // Same with t and t' already known.
  double kbar_tp(double t, double tprime, double r) const;
  // The t -> infinity limit K(r), r > 0.
  double k_infinity(double r) const;

  // Separation beyond which Q_s vanishes for every s >= t.
  double support_radius(double t) const;

 private:
  double running_F(double v) const;
  double running_H(double v) const;

  double eta1_, eta2_;
  std::shared_ptr<const SmoothingKernel> kappa_;
  std::shared_ptr<const UniformHermite> F_, H_;
  double vmax_ = 40.0, F_end_ = 0.0, H_end_ = 0.0;
};

double eval_scale_density(const StarScaleKernel& k, double t, const Point& x, const Point& y);

// Kbar_t(x, y) by adaptive quadrature of the defining integral.
double eval_kbar(const StarScaleKernel& k, double t, const Point& x, const Point& y);

struct KInfinityValue {
  double value = 0.0;
  double t_used = 0.0;  // scale at which the integral is stationary
};

// K(x, y) approximated by Kbar_{t_max}; t_max is raised to at least the scale
// where kappa(e^s |x - y|) vanishes, past which Kbar_t is constant in t.
KInfinityValue eval_k_infinity(const StarScaleKernel& k, const Point& x, const Point& y,
                               std::optional<double> t_max = std::nullopt);

}  // namespace gmc
