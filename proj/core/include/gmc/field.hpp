#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmc/envelope.hpp"
#include "gmc/kernel.hpp"
#include "gmc/mollifier.hpp"

namespace gmc {

// Checkpoints 0 <= t_0 < t_1 < ... < t_m on a sub-step lattice of width dt.
class ScaleGrid {
 public:
  ScaleGrid() = default;
  ScaleGrid(std::vector<double> checkpoints, double dt);

  const std::vector<double>& checkpoints() const { return checkpoints_; }
  const std::vector<std::size_t>& checkpoint_steps() const { return steps_; }
  double dt() const { return dt_; }
  std::size_t substeps() const { return steps_.empty() ? 0 : steps_.back(); }
  double time(std::size_t step) const { return dt_ * static_cast<double>(step); }
  double horizon() const { return time(substeps()); }

 private:
  std::vector<double> checkpoints_;
  std::vector<std::size_t> steps_;
  double dt_ = 0.05;
};

inline constexpr std::size_t kNotCheckpoint = std::numeric_limits<std::size_t>::max();

// One replica's field at a sub-step time. Spans point into sampler-owned
// storage and are only valid during the observer call.
struct FieldState {
  double t = 0.0;
  std::size_t step = 0;
  std::size_t checkpoint = kNotCheckpoint;
  double rho_r = 0.0;  // rho_r(t) of the sampler's shifted envelope
  std::span<const double> values;       // Xbar_t(x_i)
  std::span<const double> max_plain;    // max_{s<=t} Xbar_s - sqrt(2d) s
  std::span<const double> max_shifted;  // max_{s<=t} Xbar_s - sqrt(2d) s + rho_r(s)
  std::span<const double> mollified;    // X_eps(x_i); joint sampler, final call only
};

// Called once per (replica, reported time). Different replicas may be
// reported from different threads; calls for one replica are sequential.
using FieldObserver = std::function<void(std::size_t replica, const FieldState&)>;

struct SamplerOptions {
  std::size_t chunk = 32;     // replicas advanced together per work item
  unsigned threads = 1;
  bool every_step = false;    // report every sub-step, not only checkpoints
};

// Stored trajectory of one replica.
struct FieldPath {
  std::vector<Point> sites;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::vector<double> times;                       // recorded times
  std::vector<std::vector<double>> values;         // [time][site]
  std::vector<double> checkpoint_times;
  std::vector<double> checkpoint_rho;              // rho_r at each checkpoint
  std::vector<std::vector<double>> checkpoint_values, max_plain, max_shifted;
  std::vector<double> mollified;                   // joint sampler only

  std::size_t checkpoint_index(double t) const;    // UsageError if t is not a checkpoint
  FieldState state(std::size_t checkpoint) const;
};

// C_ij = Kbar_{tb}(x_i, x_j) - Kbar_{ta}(x_i, x_j), diagonal exactly tb - ta.
Eigen::MatrixXd increment_covariance(const StarScaleKernel& k, double ta, double tb, const std::vector<Point>& sites);

// Scale-martingale sampler on a fixed site set. Replicas draw from streams
// derive_seed(seed, replica, "field"), so results do not depend on chunking
// or thread count.
class ScaleFieldSampler {
 public:
  ScaleFieldSampler(StarScaleKernel k, ScaleGrid grid, std::vector<Point> sites, ShiftedEnvelope shift = {});

  void run(std::uint64_t seed, std::size_t first_replica, std::size_t replicas, const FieldObserver& observer,
           const SamplerOptions& options = {}) const;

  std::vector<FieldPath> sample_paths(std::uint64_t seed, std::size_t replicas, bool record_substeps,
                                      const SamplerOptions& options = {}) const;

  const ScaleGrid& grid() const { return grid_; }
  const std::vector<Point>& sites() const { return sites_; }
  const ShiftedEnvelope& shift() const { return shift_; }
  const StarScaleKernel& kernel() const { return k_; }

 private:
  StarScaleKernel k_;
  ScaleGrid grid_;
  std::vector<Point> sites_;
  ShiftedEnvelope shift_;
};

FieldPath sample_scale_path(const StarScaleKernel& k, const ScaleGrid& grid, const std::vector<Point>& sites,
                            const ShiftedEnvelope& shift, std::uint64_t seed, std::uint64_t replica = 0);

// X_eps on the sites with covariance K_eps, replicas x sites. Streams use the
// label "mollified".
Eigen::MatrixXd sample_mollified_field(const StarScaleKernel& k, const Mollifier& m, const std::vector<Point>& sites,
                                       std::uint64_t seed, std::size_t replicas);

// K_eps(x, x), the same for every site.
double mollified_variance(const StarScaleKernel& k, const Mollifier& m);

// Samples the scale path Xbar jointly with X_eps: each sub-step draws
// (dXbar, dY) with cross-covariance theta_eps * dKbar, and a final independent
// remainder phi_eps * (K - Kbar_T) completes X_eps. Requires horizon >= t_eps.
class JointMollifiedSampler {
 public:
  JointMollifiedSampler(StarScaleKernel k, Mollifier m, ScaleGrid grid, std::vector<Point> sites,
                        ShiftedEnvelope shift = {});

  // The observer sees every checkpoint; the last call also carries X_eps.
  void run(std::uint64_t seed, std::size_t replicas, const FieldObserver& observer,
           const SamplerOptions& options = {}) const;

  const ScaleGrid& grid() const { return grid_; }
  const Mollifier& mollifier() const { return m_; }

 private:
  StarScaleKernel k_;
  Mollifier m_;
  ScaleGrid grid_;
  std::vector<Point> sites_;
  ShiftedEnvelope shift_;
};

struct CovEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Unbiased sample covariance with a jackknife standard error. Needs >= 100
// samples (ValidationError otherwise).
CovEstimate empirical_covariance(std::span<const double> a, std::span<const double> b);

struct CovProbe {
  std::size_t site_a = 0, site_b = 0;
  double time_a = 0.0, time_b = 0.0;  // checkpoint times
};

std::vector<CovEstimate> empirical_covariance(const std::vector<FieldPath>& ensemble, const std::vector<CovProbe>& probes);

}  // namespace gmc
