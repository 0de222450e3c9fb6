#include "gmc/factor.hpp"

#include <cmath>
#include <sstream>

#include "gmc/errors.hpp"

namespace gmc {

PsdFactor psd_factor(const Eigen::MatrixXd& C, const std::string& context) {
  PsdFactor out;
  if (C.rows() != C.cols()) throw ValidationError(context + ": covariance matrix is not square");
  if (C.rows() == 0) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() == Eigen::Success) {
    out.L = llt.matrixL();
    return out;
  }
  Eigen::MatrixXd shifted = C;
  shifted.diagonal().array() += kPsdTolerance;
  llt.compute(shifted);
  if (llt.info() == Eigen::Success) {
    out.L = llt.matrixL();
    out.jitter = kPsdTolerance;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw NumericError(context + ": eigendecomposition failed");
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  if (out.min_eigenvalue < -kPsdTolerance) {
    std::ostringstream os;
    os << context << ": covariance not positive semidefinite (smallest eigenvalue " << out.min_eigenvalue << ")";
    throw NumericError(os.str());
  }
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  out.L = es.eigenvectors() * s.asDiagonal();
  out.spectral = true;
  return out;
}

}  // namespace gmc
