#pragma once

#include <string>

#include <Eigen/Dense>

namespace gmc {

// Lower factor L with L L^T = C (up to the recorded jitter).
struct PsdFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;         // diagonal shift that was added, if any
  bool spectral = false;       // true when built from an eigendecomposition
  double min_eigenvalue = 0.0; // only computed when Cholesky failed
};

// Cholesky first; on failure retry with a 1e-8 diagonal shift, then fall back
// to V diag(sqrt(max(lambda, 0))) when the smallest eigenvalue is within
// -1e-8 of zero. Anything more negative raises NumericError naming the
// eigenvalue and the caller's context string.
PsdFactor psd_factor(const Eigen::MatrixXd& C, const std::string& context);

inline constexpr double kPsdTolerance = 1e-8;

}  // namespace gmc
