#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gmc {

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Mean with standard error sample SD / sqrt(n).
McEstimate mc_mean(std::span<const double> scores);

// Unbiased variance with a jackknife standard error.
McEstimate sample_variance(std::span<const double> xs);

// Pearson correlation with a jackknife standard error.
McEstimate sample_correlation(std::span<const double> a, std::span<const double> b);

// Linear-interpolated empirical quantile, p in [0, 1].
double quantile(std::vector<double> xs, double p);

// |a - b| in units of the combined standard error (0 when both SEs vanish and a == b).
double z_score(const McEstimate& a, const McEstimate& b);
double z_score(const McEstimate& a, double exact);

}  // namespace gmc
