#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmc/envelope.hpp"
#include "gmc/field.hpp"
#include "gmc/kernel.hpp"
#include "gmc/measures.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/statistics.hpp"

namespace gmc {

// Barrier q and envelope shift r for the events
//   A^(q)_t(x):   Xbar_s(x) < sqrt(2d) s + q              for all s <= t
//   A^(q,r)_t(x): Xbar_s(x) < sqrt(2d) s + q - rho_r(s)   for all s <= t
struct TruncationParams {
  double q = 1.0;
  double r = 0.0;
  EnvelopeFn rho = EnvelopeFn::zero();

  void validate() const;
  ShiftedEnvelope shift() const { return {rho, r}; }
};

enum class Statistic { M, D, Mq, Mqr, Dq, Dqr };
inline constexpr std::array<Statistic, 6> kStatistics{Statistic::M,  Statistic::D,  Statistic::Mq,
                                                      Statistic::Mqr, Statistic::Dq, Statistic::Dqr};

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& name);
// M-type statistics carry the sqrt(pi t / 2) normalisation.
inline bool is_mass(Statistic s) { return s == Statistic::M || s == Statistic::Mq || s == Statistic::Mqr; }

struct GmcSnapshot {
  double t = 0.0;       // checkpoint, or t_eps for mollified snapshots
  double eps = 0.0;     // 0 unless mollified
  bool mollified = false;
  bool truncated = true;  // false: only M is available
  std::array<double, 6> values{};
  double scale = 0.0;     // sqrt(pi t / 2)
  bool q_triggered = false;  // some atom of E has left A^(q)
  std::vector<double> atom_weights;  // e^{sqrt(2d) X - d K} per atom of E, when kept

  double operator[](Statistic s) const { return values[static_cast<std::size_t>(s)]; }
  double scaled(Statistic s) const { return is_mass(s) ? scale * (*this)[s] : (*this)[s]; }
};

// Statistics at the time of `state`; the sampler sites must be the atoms of mu
// in order, and E indexes them.
GmcSnapshot snapshot_statistics(const FieldState& state, const ReferenceMeasure& mu, std::span<const std::size_t> E,
                                double q, bool keep_atoms = false);

// Same from a stored path at checkpoint t. UsageError if t is not a
// checkpoint or if the path was sampled with a different envelope shift.
GmcSnapshot snapshot_statistics(const FieldPath& path, const ReferenceMeasure& mu, std::span<const std::size_t> E,
                                const TruncationParams& p, double t, bool keep_atoms = false);

// M_eps from mollified values with variance K_eps(x, x). With a joint state at
// t_eps, the truncated masses are gated on its barrier events and the D
// statistics are those of the scale path at t_eps.
GmcSnapshot mollified_statistics(std::span<const double> x_eps, double k_eps_diag, double eps,
                                 const ReferenceMeasure& mu, std::span<const std::size_t> E, double q,
                                 const FieldState* joint = nullptr);

GmcSnapshot mollified_statistics(const StarScaleKernel& k, const Mollifier& m, const ReferenceMeasure& mu,
                                 std::span<const std::size_t> E, const TruncationParams& p, const FieldPath& joint);

std::vector<std::size_t> all_atoms(const ReferenceMeasure& mu);
// Atoms inside the closed box [lo, hi].
std::vector<std::size_t> atoms_in(const ReferenceMeasure& mu, const Point& lo, const Point& hi);

// snapshots[subset][replica][checkpoint]
using Ensemble = std::vector<std::vector<std::vector<GmcSnapshot>>>;

struct EnsembleSpec {
  std::vector<std::vector<std::size_t>> subsets;  // empty: the full atom set
  TruncationParams trunc;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  SamplerOptions options;
  bool keep_atoms = false;
};

Ensemble run_ensemble(const StarScaleKernel& k, const ScaleGrid& grid, const ReferenceMeasure& mu,
                      const EnsembleSpec& spec);

// snapshots[subset][replica]. Joint mode samples X_eps together with the
// scale path on a grid ending at t_eps; otherwise only M_eps is produced.
std::vector<std::vector<GmcSnapshot>> run_mollified_ensemble(const StarScaleKernel& k, const Mollifier& m,
                                                             const ReferenceMeasure& mu, const EnsembleSpec& spec,
                                                             bool joint, double dt);

struct MomentRow {
  double t = 0.0;
  Statistic stat = Statistic::M;
  bool scaled = false;
  McEstimate mean;
  McEstimate variance;
  double ci_lo = 0.0, ci_hi = 0.0;  // mean +- 1.96 SE
};

// Per-checkpoint moments across replicas for one subset: snapshots[replica][checkpoint].
// ValidationError below 100 replicas.
std::vector<MomentRow> ensemble_moments(const std::vector<std::vector<GmcSnapshot>>& snapshots,
                                        std::span<const Statistic> stats, bool scaled = false);

// Column of one statistic across replicas at checkpoint j.
std::vector<double> column(const std::vector<std::vector<GmcSnapshot>>& snapshots, std::size_t j, Statistic s,
                           bool scaled = false);

}  // namespace gmc
