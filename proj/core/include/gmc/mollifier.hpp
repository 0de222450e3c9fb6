#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gmc/interp.hpp"
#include "gmc/kernel.hpp"

namespace gmc {

// theta: radial bump supported in the unit ball with unit mass; theta_eps is
// its rescaling to radius eps. phi = theta * theta (support radius 2) is kept
// as a table because every double-mollified covariance integrates against it.
class Mollifier {
 public:
  Mollifier(BumpFamily family, int d, double eps);

  double theta(double r) const;      // unit scale
  double theta_eps(double r) const;  // eps^{-d} theta(r / eps)
  double phi(double r) const;        // (theta * theta)(r), unit scale
  double phi_eps(double r) const;

  double eps() const { return eps_; }
  double t_eps() const { return -std::log(eps_); }
  int dimension() const { return d_; }
  BumpFamily family() const { return family_; }
  double mass_error() const { return mass_error_; }

 private:
  BumpFamily family_;
  int d_;
  double eps_;
  double norm_ = 1.0;
  double mass_error_ = 0.0;
  std::shared_ptr<const UniformPchip> phi_;
};

// (h * g)(r e1) for radial h supported in the ball of radius h_radius and a
// radial g that may have an integrable singularity at the origin.
double radial_convolve(int d, const std::function<double(double)>& h, double h_radius,
                       const std::function<double(double)>& g, double r, double tol = 1e-9);

enum class MollifiedKind {
  Full,   // K_eps = phi_eps * K
  Scale,  // K_{t,eps} = phi_eps * Kbar_t
  Cross,  // Kbar_{t,eps,0} = theta_eps * Kbar_t (one argument mollified)
};

// Mollified covariances at separation |x - y|. Without t only Full is allowed;
// with t, kind selects Scale or Cross.
double eval_mollified_cov(const StarScaleKernel& k, const Mollifier& m, std::optional<double> t,
                          const Point& x, const Point& y, MollifiedKind kind = MollifiedKind::Full);

// Radial versions used by the samplers: the mollified increment
// Kbar_{tb} - Kbar_{ta} and the remainder K - Kbar_T.
double mollified_increment(const StarScaleKernel& k, const Mollifier& m, double ta, double tb, double r,
                           bool cross);
double mollified_remainder(const StarScaleKernel& k, const Mollifier& m, double T, double r);

struct LogBoundReport {
  double kbar = 0.0;         // sup |Kbar_t - t ^ log+(1/|x-y|)|
  double kt = 0.0;           // same for K_t (= Kbar_t since K_0 = 0)
  double kt_eps = 0.0;       // sup |K_{t,eps} - t ^ log+(1/(|x-y| v eps))|
  double kbar_cross = 0.0;   // sup |Kbar_{t,eps,0} - t ^ log+(1/(|x-y| v eps))|
  std::size_t probes = 0;
};

// Uniform deviation from the logarithmic profile over probe separations and
// scales t.
LogBoundReport check_log_bound(const StarScaleKernel& k, const Mollifier& m, const std::vector<double>& separations,
                               const std::vector<double>& ts);

}  // namespace gmc
