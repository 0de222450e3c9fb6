#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gmc/envelope.hpp"
#include "gmc/statistics.hpp"

namespace gmc {

// P_a[B_s >= 0 for all s <= t] = sqrt(2/(pi t)) int_0^a e^{-z^2/(2t)} dz.
double stay_positive_prob(double a, double t);
// Probability that a Brownian bridge from a to b over [0, t] stays positive.
double bridge_positive_prob(double a, double b, double t);
// P[B_s < a s + b for all s >= 0].
double below_line_prob(double a, double b);

// Monitoring grid for path samplers: steps of width dt (1 + growth)^k, the
// last one clipped to land on the horizon.
struct PathConfig {
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t replicas = 100000;
  std::uint64_t seed = 0;
  double growth = 0.0;

  void validate() const;
  std::vector<double> times() const;
};

struct PathEnsemble {
  std::vector<double> times;
  Eigen::MatrixXd paths;        // replicas x times
  std::vector<double> weights;  // importance weights, mean 1 in expectation
};

// |a e1 + W| for a 3-d Brownian motion W, exact Gaussian increments.
PathEnsemble sample_bessel3(double a, const PathConfig& cfg);

// Brownian paths from a conditioned to stay >= 0 on [0, t]. Rejection (with
// the exact bridge kill between grid points) while the acceptance probability
// is at least 1e-3, Bessel-3 proposals weighted by a / (beta_t P_a[stay >= 0])
// otherwise.
PathEnsemble sample_conditioned_positive(double a, double t, const PathConfig& cfg);

// Path Monte Carlo oracles for the closed forms. Between monitoring times the
// exact bridge survival factor 1 - exp(-2 g_k g_{k+1} / dt) is applied to the
// distances g to the barrier, so the only bias is the finite horizon of the
// below-line estimator.
McEstimate mc_stay_positive(double a, double t, const PathConfig& cfg);
McEstimate mc_bridge_positive(double a, double b, double t, const PathConfig& cfg);
McEstimate mc_below_line(double a, double b, const PathConfig& cfg);

struct DoobMcKeanCheck {
  McEstimate weighted_brownian;  // E_a[(B_t / a) 1{B >= 0 on [0,t]} 1{B_t <= level}]
  McEstimate bessel;             // Q_a[beta_t <= level]
};

DoobMcKeanCheck doob_mckean_check(double a, double t, double level, const PathConfig& cfg);

struct SurvivalEstimate {
  McEstimate estimate;
  double horizon = 0.0;
  double tail = 0.0;  // int_T^inf rho(u) u^{-3/2} du, the truncation heuristic
};

// Q_a[beta_s >= rho_r(s) at every monitoring time s <= T].
SurvivalEstimate envelope_survival_prob(double a, const ShiftedEnvelope& rho_r, const PathConfig& cfg);

// Q_{a,t}[B_s >= rho_r(s) for monitoring times s <= t], through the
// Doob-McKean weight a / beta_t on Bessel-3 paths.
SurvivalEstimate conditioned_envelope_survival(double a, const ShiftedEnvelope& rho_r, double t, const PathConfig& cfg);

// P_a[B_s > rho_r(s) at monitoring times s <= T] for plain Brownian motion,
// and the companion E_a[B_T 1{...}]. Same monitoring as the field sampler.
struct BrownianSurvival {
  McEstimate probability;
  McEstimate endpoint_mean;
};
BrownianSurvival brownian_envelope_survival(double a, const ShiftedEnvelope& rho_r, const PathConfig& cfg);

// eta(q, r) = q Q_q[beta_s >= rho_r(s) for all s], truncated at cfg.horizon.
// ValidationError if rho fails the Dvoretzky-Erdos test.
SurvivalEstimate eta_constant(double q, const EnvelopeFn& rho, double r, const PathConfig& cfg);

// int_T^inf rho(u) u^{-3/2} du (infinite for divergent rho).
double envelope_tail(const EnvelopeFn& rho, double T);

}  // namespace gmc
