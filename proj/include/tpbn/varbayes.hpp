#pragma once

// Mean-field variational Bayes for the TPB normal scale mixture regression.
// Each cycle applies the moment updates in a fixed order:
//   <beta>, V_beta -> c*, d*, <sigma^-2> -> <tau>, <tau^-1> -> <lambda>
//   -> <phi> -> <omega>.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"
#include "tpbn/gibbs.hpp"
#include "tpbn/gig.hpp"
#include "tpbn/linalg.hpp"
#include "tpbn/model.hpp"
#include "tpbn/report.hpp"

namespace tpbn {

struct VbState {
  VectorXd mean_beta;
  /// Full posterior covariance; materialized on the p <= n route only.
  MatrixXd cov_beta;
  VectorXd var_beta;  ///< diagonal of V_beta, always present
  double mean_prec = 1.0;
  VectorXd mean_tau;
  VectorXd mean_tau_inv;
  VectorXd mean_lambda;
  double mean_phi = 1.0;
  double mean_omega = 0.5;
  double c_star = 0.0;
  double d_star = 0.0;

  /// <beta_j^2> = V_jj + <beta_j>^2
  [[nodiscard]] VectorXd second_moment() const { return var_beta + mean_beta.cwiseAbs2(); }
};

struct VbOptions {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
};

struct VbResult {
  VbState state;
  FitReport report;
};

inline constexpr double kVbBeta2Floor = 1e-300;

/// <tau> and <tau^-1> for tau ~ GIG(a - 1/2, 2 lambda, xi). With
/// allow_shortcut and a = 1 the Bessel ratio collapses: K_{1/2} = K_{-1/2} and
/// K_{3/2}(z) = K_{1/2}(z)(1 + 1/z).
inline std::pair<double, double> vb_tau_moments(double a, double mean_lambda, double xi, bool allow_shortcut = true) {
  const double nu = 2.0 * mean_lambda;
  xi = std::max(xi, kVbBeta2Floor);
  if (allow_shortcut && a == 1.0) {
    const double omega = std::sqrt(nu * xi);
    const double scale = std::sqrt(xi / nu);
    return {scale * (1.0 + 1.0 / omega), 1.0 / scale};
  }
  const GigParams gig{a - 0.5, nu, xi};
  return {gig_mean(gig), gig_inv_mean(gig)};
}

inline VbState vb_initial_state(const RegressionDataset& data, const PriorConfig& prior) {
  const Index p = data.p();
  VbState s;
  const double phi0 = prior.hierarchical_phi() ? 1.0 : prior.tpb.fixed_phi();
  s.mean_beta = VectorXd::Zero(p);
  s.var_beta = VectorXd::Zero(p);
  s.mean_prec = 1.0 / response_variance(data.y);
  s.mean_tau = VectorXd::Ones(p);
  s.mean_tau_inv = VectorXd::Ones(p);
  s.mean_lambda = VectorXd::Constant(p, (prior.tpb.a + prior.tpb.b) / (1.0 + phi0));
  s.mean_phi = phi0;
  s.mean_omega = 0.5;
  return s;
}

/// Starting point taken from a Gibbs draw, e.g. the end of a converged chain.
inline VbState vb_state_from_draw(const GibbsState& draw, const RegressionDataset& data, const PriorConfig& prior) {
  VbState s = vb_initial_state(data, prior);
  detail::require_usage(draw.beta.size() == data.p() && draw.tau.size() == data.p() && draw.lambda.size() == data.p(),
                        "vb: Gibbs draw does not conform to p");
  s.mean_beta = draw.beta;
  s.mean_prec = draw.sigma2_inv;
  s.mean_tau = draw.tau;
  s.mean_tau_inv = draw.tau.cwiseInverse();
  s.mean_lambda = draw.lambda;
  if (prior.hierarchical_phi()) {
    s.mean_phi = draw.phi;
    s.mean_omega = draw.omega;
  }
  return s;
}

/// One full update cycle.
inline VbState vb_step(const VbState& state, const RegressionDataset& data, const SufficientStats& stats,
                       const PriorConfig& prior) {
  const Index n = data.n();
  const Index p = data.p();
  const double a = prior.tpb.a;
  const double b = prior.tpb.b;
  VbState next = state;

  // q(beta): A = X'X + diag(<tau^-1>), <beta> = A^-1 X'y, V = A^-1 / <sigma^-2>.
  double trace_xtx_ainv = 0.0;  // tr(X'X A^-1)
  if (p <= n) {
    MatrixXd a_mat = stats.xtx;
    a_mat.diagonal() += state.mean_tau_inv;
    const auto llt = detail::robust_llt(std::move(a_mat), "vb beta update");
    const MatrixXd a_inv = llt.solve(MatrixXd::Identity(p, p));
    next.mean_beta = a_inv * stats.xty;
    next.cov_beta = a_inv / state.mean_prec;
    next.var_beta = next.cov_beta.diagonal();
    trace_xtx_ainv = (stats.xtx.cwiseProduct(a_inv)).sum();
  } else {
    // Woodbury: A^-1 = D^-1 - D^-1 X' M^-1 X D^-1, M = I + X D^-1 X'.
    const VectorXd d_inv = state.mean_tau_inv.cwiseInverse();
    const MatrixXd xs = data.X * d_inv.cwiseSqrt().asDiagonal();
    MatrixXd m = MatrixXd::Identity(n, n);
    m.selfadjointView<Eigen::Lower>().rankUpdate(xs);
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
    const auto llt = detail::robust_llt(std::move(m), "vb beta update (n x n route)");
    next.mean_beta = d_inv.cwiseProduct(data.X.transpose() * llt.solve(data.y));
    const MatrixXd w = llt.matrixL().solve(data.X);  // L^-1 X
    const VectorXd quad = w.colwise().squaredNorm().transpose();
    next.var_beta = (d_inv - d_inv.cwiseAbs2().cwiseProduct(quad)).cwiseMax(0.0) / state.mean_prec;
    next.cov_beta.resize(0, 0);
    const MatrixXd m_inv = llt.solve(MatrixXd::Identity(n, n));
    trace_xtx_ainv = static_cast<double>(n) - m_inv.trace();
  }

  // q(sigma^-2) = G(c*, d*); sum_i x_i' <beta beta'> x_i = tr(X'X V) + <beta>'X'X<beta>.
  const VectorXd beta2 = next.second_moment();
  const double fitted_sq = (data.X * next.mean_beta).squaredNorm();
  next.c_star = 0.5 * (static_cast<double>(n + p) + prior.c0);
  const double quad_form = trace_xtx_ainv / state.mean_prec + fitted_sq;
  next.d_star = 0.5 * (stats.yty - 2.0 * stats.xty.dot(next.mean_beta) + quad_form +
                       beta2.cwiseProduct(state.mean_tau_inv).sum() + prior.d0);
  if (!(next.d_star > 0.0)) next.d_star = 1e-300;
  next.mean_prec = next.c_star / next.d_star;

  for (Index j = 0; j < p; ++j) {
    const double lambda_j = state.mean_lambda(j);
    const double xi = next.mean_prec * beta2(j);
    if (!(std::isfinite(lambda_j) && lambda_j > 0.0 && std::isfinite(xi))) {
      std::ostringstream msg;
      msg << "vb: invalid GIG inputs at coordinate " << j << " (<lambda>=" << lambda_j << ", xi=" << xi << ")";
      throw NumericalError(msg.str());
    }
    const auto [t, ti] = vb_tau_moments(a, lambda_j, xi);
    next.mean_tau(j) = t;
    next.mean_tau_inv(j) = ti;
  }
  next.mean_lambda = (a + b) / (next.mean_tau.array() + state.mean_phi);
  if (prior.hierarchical_phi()) {
    next.mean_phi = (static_cast<double>(p) * b + 0.5) / (state.mean_omega + next.mean_lambda.sum());
  } else {
    next.mean_phi = prior.tpb.fixed_phi();
  }
  next.mean_omega = 1.0 / (next.mean_phi + 1.0);

  auto check = [](const VectorXd& v, const char* name) {
    for (Index j = 0; j < v.size(); ++j) {
      if (!std::isfinite(v(j)) || !(v(j) > 0.0)) {
        std::ostringstream msg;
        msg << "vb: non-finite or non-positive " << name << " at coordinate " << j << " (value " << v(j) << ")";
        throw NumericalError(msg.str());
      }
    }
  };
  if (!next.mean_beta.allFinite()) throw NumericalError("vb: non-finite coefficient mean");
  check(next.mean_tau, "<tau>");
  check(next.mean_tau_inv, "<tau^-1>");
  check(next.mean_lambda, "<lambda>");
  if (!std::isfinite(next.mean_prec) || !std::isfinite(next.mean_phi)) {
    throw NumericalError("vb: non-finite global moment");
  }
  return next;
}

namespace detail {

inline double rel_change(const VectorXd& prev, const VectorXd& next) {
  const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
  return (next - prev).cwiseAbs().maxCoeff() / scale;
}

inline double rel_change(double prev, double next) {
  return std::abs(next - prev) / std::max(std::abs(next), 1e-300);
}

/// Relative change of every moment block between two states.
inline std::map<std::string, double> vb_block_changes(const VbState& prev, const VbState& next) {
  auto vec = [](const VectorXd& a, const VectorXd& b) { return b.size() ? rel_change(a, b) : 0.0; };
  return {
      {"mean_beta", vec(prev.mean_beta, next.mean_beta)},
      {"var_beta", vec(prev.var_beta, next.var_beta)},
      {"mean_prec", rel_change(prev.mean_prec, next.mean_prec)},
      {"mean_tau", vec(prev.mean_tau, next.mean_tau)},
      {"mean_tau_inv", vec(prev.mean_tau_inv, next.mean_tau_inv)},
      {"mean_lambda", vec(prev.mean_lambda, next.mean_lambda)},
      {"mean_phi", rel_change(prev.mean_phi, next.mean_phi)},
      {"mean_omega", rel_change(prev.mean_omega, next.mean_omega)},
  };
}

inline double vb_change(const VbState& prev, const VbState& next) {
  double worst = 0.0;
  for (const auto& [name, value] : vb_block_changes(prev, next)) worst = std::max(worst, value);
  return worst;
}

}  // namespace detail

/// Relative change of every moment block under one more cycle from `state`.
inline std::map<std::string, double> vb_residuals(const VbState& state, const RegressionDataset& data,
                                                  const SufficientStats& stats, const PriorConfig& prior) {
  return detail::vb_block_changes(state, vb_step(state, data, stats, prior));
}

/// Iterates vb_step until the largest relative change over all moment blocks
/// drops below tol. Hitting max_iter is reported, not thrown.
inline VbResult run_vb(const RegressionDataset& data, const PriorConfig& prior, const VbOptions& options = {},
                       const std::optional<VbState>& init = std::nullopt) {
  data.validate();
  prior.validate();
  detail::require_usage(options.tol > 0.0, "vb: tol must be positive");
  Stopwatch clock;
  const SufficientStats stats = build_stats(data);
  VbState state = init ? *init : vb_initial_state(data, prior);
  if (state.var_beta.size() != data.p()) state.var_beta = VectorXd::Zero(data.p());

  VbResult out;
  bool converged = false;
  std::size_t it = 0;
  while (it < options.max_iter) {
    VbState next = vb_step(state, data, stats, prior);
    ++it;
    const double change = detail::vb_change(state, next);
    state = std::move(next);
    if (change < options.tol) {
      converged = true;
      break;
    }
  }

  FitReport& rep = out.report;
  rep.method = "vb";
  rep.beta = state.mean_beta;
  rep.beta_sd = state.var_beta.cwiseSqrt();
  rep.beta_lower = state.mean_beta - 1.959963984540054 * rep.beta_sd;
  rep.beta_upper = state.mean_beta + 1.959963984540054 * rep.beta_sd;
  rep.sigma2 = state.d_star / (state.c_star - 1.0 > 0.0 ? state.c_star - 1.0 : state.c_star);
  rep.phi = state.mean_phi;
  rep.iterations = it;
  rep.converged = converged;
  if (!converged) rep.warnings.push_back("vb: max_iter reached before convergence");
  rep.wall_seconds = clock.seconds();
  out.state = std::move(state);
  return out;
}

}  // namespace tpbn
