#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gmc/envelope.hpp"
#include "gmc/kernel.hpp"

namespace gmc {

// Atomized locally finite measure: weighted points in R^d.
struct ReferenceMeasure {
  int d = 1;
  std::vector<Point> points;
  std::vector<double> weights;
  double total_mass = 0.0;
  Point box_lo{0.0, 0.0}, box_hi{0.0, 0.0};
  std::string scheme;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return points.size(); }
  double mass(std::span<const std::size_t> subset) const;
};

struct Box {
  int d = 1;
  Point lo{0.0, 0.0}, hi{1.0, 1.0};
};

inline constexpr std::size_t kMaxAtoms = 4096;
inline constexpr int kMaxCantorLevel = 14;

// Compensated sum, so that total masses of regular grids come out exact.
double neumaier_sum(std::span<const double> xs);

ReferenceMeasure build_lebesgue(const Box& box, double h);

struct CantorSpec {
  EnvelopeFn schedule = EnvelopeFn::zero();  // theta
  int level = 0;
};

// a_k = 1 - exp(-(theta(k) - theta(k-1))), k = 1..level.
std::vector<double> cantor_gaps(const CantorSpec& spec);
// d_k = 2^{-k} exp(-theta(k)), k = 0..level.
std::vector<double> cantor_diameters(const CantorSpec& spec);

ReferenceMeasure build_cantor(const CantorSpec& spec);

// Occupation measure of a Brownian path on [0, T]: atoms at B_{k dt}, weight dt.
ReferenceMeasure build_occupation(double T, double dt, std::uint64_t seed, int d = 2);

// sum_{i != j, |x_i - x_j| <= 1} w_i w_j / (|x_i - x_j|^d e^{rho(log 1/|x_i - x_j|)}).
double capacity_integral(const ReferenceMeasure& mu, const EnvelopeFn& rho);

// Per-atom potential sum_{j != i, |x_i - x_j| <= 1} w_j / (|x_i - x_j|^d e^{rho(...)}).
std::vector<double> local_potentials(const ReferenceMeasure& mu, const EnvelopeFn& rho);

struct CapacityBracket {
  double lower = 0.0;        // sum over levels 1..n_max of the level minima
  double upper = 0.0;        // same with maxima
  double upper_total = 0.0;  // upper series continued until it settles (or gives up)
  bool converged = false;
  std::size_t levels_used = 0;
  bool regular_variation_family = false;  // theta of the form u^{1/2} L(u)
};

// Level-by-level bounds for int int mu(dx) mu(dy) / (|x - y| e^{alpha theta(log 1/|x - y|)})
// on the Cantor measure: the 2^{n-1} sibling pairs of level n sit at
// separations in [a_n d_{n-1}, d_{n-1}] and carry mass 2^{-n} in total.
CapacityBracket cantor_capacity_bounds(const CantorSpec& spec, double alpha, int n_max, double tol = 1e-6);

// Keeps atoms whose local potential is <= threshold.
ReferenceMeasure restrict_to_regular_part(const ReferenceMeasure& mu, const EnvelopeFn& rho,
                                          double threshold = std::numeric_limits<double>::infinity());

void write_atoms_csv(const ReferenceMeasure& mu, std::ostream& os);

}  // namespace gmc
