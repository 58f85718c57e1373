#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"
#include "tpbn/tpb.hpp"

namespace tpbn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// y = X beta + eps, with optional simulation ground truth.
struct RegressionDataset {
  VectorXd y;
  MatrixXd X;
  std::optional<VectorXd> true_beta;
  std::optional<MatrixXd> design_cov;
  std::optional<double> noise_sd;

  [[nodiscard]] Index n() const { return X.rows(); }
  [[nodiscard]] Index p() const { return X.cols(); }

  void validate() const {
    if (y.size() != X.rows()) {
      std::ostringstream msg;
      msg << "dataset: response has " << y.size() << " entries but design has " << X.rows() << " rows";
      throw UsageError(msg.str());
    }
    if (true_beta && true_beta->size() != X.cols()) throw UsageError("dataset: true_beta does not conform to p");
    if (design_cov) {
      if (design_cov->rows() != X.cols() || design_cov->cols() != X.cols()) {
        throw UsageError("dataset: design_cov must be p x p");
      }
      if (!design_cov->isApprox(design_cov->transpose(), 1e-12)) throw UsageError("dataset: design_cov not symmetric");
      if (Eigen::LLT<MatrixXd>(*design_cov).info() != Eigen::Success) {
        throw UsageError("dataset: design_cov not positive definite");
      }
    }
  }
};

/// Prior configuration shared by all engines. phi is hierarchical
/// (phi ~ G(1/2, omega), omega ~ G(1/2, 1)) exactly when tpb.phi is empty.
struct PriorConfig {
  TpbParams tpb;
  double c0 = 0.0;  ///< sigma^-2 ~ G(c0/2, d0/2); zero is the Jeffreys default
  double d0 = 0.0;

  [[nodiscard]] bool hierarchical_phi() const { return tpb.phi_unknown(); }

  void validate() const {
    tpb.validate();
    detail::require_usage(c0 >= 0.0 && d0 >= 0.0, "prior: c0 and d0 must be non-negative");
  }
};

struct SufficientStats {
  MatrixXd xtx;
  VectorXd xty;
  double yty = 0.0;
  Index n = 0;

  [[nodiscard]] Index p() const { return xty.size(); }
};

inline SufficientStats build_stats(const RegressionDataset& data) {
  data.validate();
  SufficientStats s;
  s.n = data.n();
  s.xtx = MatrixXd::Zero(data.p(), data.p());
  s.xtx.selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose());
  s.xtx.triangularView<Eigen::StrictlyUpper>() = s.xtx.transpose();
  s.xty = data.X.transpose() * data.y;
  s.yty = data.y.squaredNorm();
  if (!std::isfinite(s.yty) || !s.xtx.allFinite() || !s.xty.allFinite()) {
    throw NumericalError("sufficient statistics overflow; rescale the data");
  }
  return s;
}

/// Undo record for standardize().
struct Standardization {
  VectorXd x_mean;
  VectorXd x_scale;
  double y_mean = 0.0;

  /// Coefficients on the original scale and the implied intercept.
  [[nodiscard]] std::pair<VectorXd, double> back_transform(const VectorXd& beta_std) const {
    VectorXd beta = beta_std.cwiseQuotient(x_scale);
    return {beta, y_mean - x_mean.dot(beta)};
  }
};

/// Centers y and every column of X, scales columns to unit (1/n) variance.
inline std::pair<RegressionDataset, Standardization> standardize(const RegressionDataset& data) {
  data.validate();
  const auto n = static_cast<double>(data.n());
  Standardization rec;
  rec.x_mean = data.X.colwise().mean().transpose();
  rec.y_mean = data.y.mean();
  RegressionDataset out;
  out.X = data.X.rowwise() - rec.x_mean.transpose();
  rec.x_scale = (out.X.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Index j = 0; j < out.X.cols(); ++j) {
    if (!(rec.x_scale(j) > 0.0)) {
      std::ostringstream msg;
      msg << "standardize: column " << j << " has zero variance";
      throw UsageError(msg.str());
    }
    out.X.col(j) /= rec.x_scale(j);
  }
  out.y = data.y.array() - rec.y_mean;
  return {std::move(out), rec};
}

inline double response_variance(const VectorXd& y) {
  if (y.size() < 2) return 1.0;
  const double v = (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
  return v > 0.0 ? v : 1.0;
}

}  // namespace tpbn
