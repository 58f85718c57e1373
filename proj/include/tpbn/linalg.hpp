#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"

namespace tpbn::detail {

/// Cholesky of a symmetric positive-definite matrix. On failure a multiple of
/// the mean diagonal is added, escalating from 1e-12 to 1e-4.
inline Eigen::LLT<Eigen::MatrixXd> robust_llt(Eigen::MatrixXd a, const std::string& context) {
  if (!a.allFinite()) throw NumericalError(context + ": matrix has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = std::max(a.diagonal().cwiseAbs().mean(), 1e-300);
  for (double jitter = 1e-12; jitter <= 1e-4; jitter *= 100.0) {
    a.diagonal().array() += jitter * scale;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return llt;
  }
  std::ostringstream msg;
  msg << context << ": factorization failed after jitter escalation (dim=" << a.rows()
      << ", min diag=" << a.diagonal().minCoeff() << ", max diag=" << a.diagonal().maxCoeff() << ")";
  throw NumericalError(msg.str());
}

inline double clamp_positive(double x, double lo = 1e-300, double hi = 1e300) {
  if (std::isnan(x)) return lo;
  return std::min(std::max(x, lo), hi);
}

}  // namespace tpbn::detail
