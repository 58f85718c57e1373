#pragma once

// Lasso baseline: cyclic coordinate descent on
//   (1/(2n)) ||y - X beta||^2 + lambda ||beta||_1
// and K-fold cross-validation over a log-spaced lambda grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"
#include "tpbn/model.hpp"
#include "tpbn/random.hpp"

namespace tpbn {

struct LassoOptions {
  double tol = 1e-9;
  std::size_t max_iter = 100000;  ///< full coordinate sweeps
};

struct LassoSolution {
  VectorXd beta;
  std::size_t sweeps = 0;
  bool converged = true;
};

struct CvPoint {
  double lambda = 0.0;
  double cv_error = 0.0;
};

struct LassoFit {
  VectorXd beta;
  double lambda = 0.0;
  std::vector<CvPoint> cv_curve;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  bool converged = true;
};

namespace detail {

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace detail

/// Coordinate descent from `start` (zeros when empty) using only X'X and X'y.
inline LassoSolution lasso_cd(const SufficientStats& stats, double lambda, const LassoOptions& options = {},
                              const VectorXd& start = VectorXd()) {
  detail::require_domain(std::isfinite(lambda) && lambda >= 0.0, "lasso: lambda must be non-negative");
  const Index p = stats.p();
  const double n = static_cast<double>(stats.n);
  LassoSolution sol;
  sol.beta = start.size() == p ? start : VectorXd::Zero(p);
  // grad_j = x_j'y - sum_k xtx_jk beta_k, kept current as coordinates move.
  VectorXd grad = stats.xty - stats.xtx * sol.beta;
  sol.converged = false;
  for (std::size_t sweep = 0; sweep < options.max_iter; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double xjj = stats.xtx(j, j);
      if (xjj <= 0.0) continue;
      const double old = sol.beta(j);
      const double z = grad(j) + xjj * old;
      const double next = detail::soft_threshold(z, n * lambda) / xjj;
      if (next != old) {
        grad -= stats.xtx.col(j) * (next - old);
        sol.beta(j) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    sol.sweeps = sweep + 1;
    if (max_change < options.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

inline LassoSolution lasso_cd(const RegressionDataset& data, double lambda, const LassoOptions& options = {}) {
  return lasso_cd(build_stats(data), lambda, options);
}

/// Smallest lambda at which beta = 0 is optimal: max_j |x_j'y| / n.
inline double lasso_lambda_max(const SufficientStats& stats) {
  return stats.xty.size() ? stats.xty.cwiseAbs().maxCoeff() / static_cast<double>(stats.n) : 0.0;
}

/// `count` points log-spaced from lambda_max down to ratio * lambda_max.
inline std::vector<double> lasso_lambda_grid(double lambda_max, std::size_t count = 100, double ratio = 1e-4) {
  std::vector<double> grid(count);
  if (count == 1) return {lambda_max};
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = lambda_max * std::pow(ratio, frac);
  }
  return grid;
}

/// Fold label per observation: a seeded shuffle of 0..n-1, position i going to fold i mod folds.
inline std::vector<std::size_t> lasso_fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_stream(seed, 0, 0x1a550);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
  return fold;
}

/// K-fold CV lasso; picks the minimum mean held-out squared error (no 1-SE
/// rule) and refits on all data. An empty grid means the default 100-point grid.
inline LassoFit cv_lasso(const RegressionDataset& data, std::size_t folds = 10, std::vector<double> lambda_grid = {},
                         std::uint64_t seed = 0, const LassoOptions& options = {}) {
  data.validate();
  const auto n = static_cast<std::size_t>(data.n());
  if (folds < 2 || n < folds) {
    std::ostringstream msg;
    msg << "cv_lasso: need 2 <= folds <= n (folds=" << folds << ", n=" << n << ")";
    throw UsageError(msg.str());
  }
  const SufficientStats full = build_stats(data);
  if (lambda_grid.empty()) lambda_grid = lasso_lambda_grid(lasso_lambda_max(full));
  for (double l : lambda_grid) detail::require_domain(std::isfinite(l) && l >= 0.0, "cv_lasso: invalid lambda");
  std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<>());

  const auto fold = lasso_fold_assignment(n, folds, seed);
  std::vector<double> sse(lambda_grid.size(), 0.0);
  bool converged = true;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(static_cast<Index>(i));
    if (train.empty() || test.empty()) throw UsageError("cv_lasso: degenerate fold");
    RegressionDataset tr;
    tr.X = data.X(train, Eigen::all);
    tr.y = data.y(train);
    const MatrixXd x_test = data.X(test, Eigen::all);
    const VectorXd y_test = data.y(test);
    const SufficientStats st = build_stats(tr);
    VectorXd warm = VectorXd::Zero(data.p());
    for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
      const LassoSolution sol = lasso_cd(st, lambda_grid[g], options, warm);
      converged = converged && sol.converged;
      warm = sol.beta;
      sse[g] += (y_test - x_test * sol.beta).squaredNorm();
    }
  }

  LassoFit fit;
  fit.folds = folds;
  fit.seed = seed;
  std::size_t best = 0;
  for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
    const double err = sse[g] / static_cast<double>(n);
    fit.cv_curve.push_back({lambda_grid[g], err});
    if (err < fit.cv_curve[best].cv_error) best = g;
  }
  fit.lambda = lambda_grid[best];
  // Refit along the grid down to the selected lambda so the warm starts match.
  VectorXd warm = VectorXd::Zero(data.p());
  for (std::size_t g = 0; g <= best; ++g) {
    const LassoSolution sol = lasso_cd(full, lambda_grid[g], options, warm);
    warm = sol.beta;
    if (g == best) converged = converged && sol.converged;
  }
  fit.beta = warm;
  fit.converged = converged;
  return fit;
}

}  // namespace tpbn
