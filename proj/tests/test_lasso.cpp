#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "tpbn/lasso.hpp"
#include "tpbn/simulation.hpp"

using namespace tpbn;

namespace {

RegressionDataset toy_data(Index n, Index p, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 3, 3);
  RegressionDataset d;
  d.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.X(i, j) = rand::normal(rng);
  }
  VectorXd beta = VectorXd::Zero(p);
  for (Index j = 0; j < std::min<Index>(p, 3); ++j) beta(j) = 2.0 - j;
  d.y = d.X * beta;
  for (Index i = 0; i < n; ++i) d.y(i) += rand::normal(rng);
  return d;
}

double objective(const RegressionDataset& d, const VectorXd& b, double lambda) {
  return (d.y - d.X * b).squaredNorm() / (2.0 * static_cast<double>(d.n())) + lambda * b.lpNorm<1>();
}

void expect_kkt(const RegressionDataset& d, const VectorXd& b, double lambda) {
  const VectorXd g = d.X.transpose() * (d.y - d.X * b) / static_cast<double>(d.n());
  for (Index j = 0; j < b.size(); ++j) {
    if (b(j) == 0.0) {
      EXPECT_LE(std::abs(g(j)), lambda + 1e-6) << j;
    } else {
      EXPECT_NEAR(g(j), lambda * (b(j) > 0 ? 1.0 : -1.0), 1e-6) << j;
    }
  }
}

}  // namespace

TEST(LassoCd, ZeroPenaltyIsOls) {
  const auto d = toy_data(40, 6, 1);
  const auto sol = lasso_cd(d, 0.0);
  ASSERT_TRUE(sol.converged);
  const VectorXd ols = d.X.colPivHouseholderQr().solve(d.y);
  EXPECT_LE((sol.beta - ols).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(LassoCd, AboveLambdaMaxIsZero) {
  const auto d = toy_data(40, 6, 2);
  const double lmax = lasso_lambda_max(build_stats(d));
  EXPECT_NEAR(lmax, (d.X.transpose() * d.y).cwiseAbs().maxCoeff() / 40.0, 1e-12);
  EXPECT_TRUE(lasso_cd(d, lmax).beta.isZero(0.0));
  EXPECT_TRUE(lasso_cd(d, 3.0 * lmax).beta.isZero(0.0));
  EXPECT_FALSE(lasso_cd(d, 0.9 * lmax).beta.isZero(0.0));
}

TEST(LassoCd, MatchesGridSearchOnSmallInstance) {
  RegressionDataset d;
  d.X = (MatrixXd(3, 2) << 1.0, 0.4, -0.6, 1.5, 0.9, -1.2).finished();
  d.y = Eigen::Vector3d(1.1, 0.5, -0.8);
  for (double lambda : {0.0, 0.05, 0.2, 0.6}) {
    double c1 = 0, c2 = 0, span = 3.0;
    for (int round = 0; round < 30; ++round) {
      double best = 1e300, b1 = c1, b2 = c2;
      for (int i = -20; i <= 20; ++i) {
        for (int j = -20; j <= 20; ++j) {
          const Eigen::Vector2d b(c1 + span * i / 20.0, c2 + span * j / 20.0);
          const double f = objective(d, b, lambda);
          if (f < best) best = f, b1 = b(0), b2 = b(1);
        }
      }
      c1 = b1, c2 = b2, span *= 0.6;
    }
    const auto sol = lasso_cd(d, lambda);
    EXPECT_NEAR(sol.beta(0), c1, 1e-4) << lambda;
    EXPECT_NEAR(sol.beta(1), c2, 1e-4) << lambda;
  }
}

TEST(LassoCd, KktConditions) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = toy_data(60, 12, seed);
    const double lmax = lasso_lambda_max(build_stats(d));
    for (double frac : {0.01, 0.1, 0.3, 0.7}) {
      const auto sol = lasso_cd(d, frac * lmax);
      ASSERT_TRUE(sol.converged);
      expect_kkt(d, sol.beta, frac * lmax);
    }
  }
  // Wide problem.
  const auto w = toy_data(20, 50, 9);
  const double l = 0.05 * lasso_lambda_max(build_stats(w));
  const auto sol = lasso_cd(w, l);
  ASSERT_TRUE(sol.converged);
  expect_kkt(w, sol.beta, l);
}

TEST(LassoCd, FlagsAndErrors) {
  const auto d = toy_data(30, 8, 4);
  LassoOptions opt;
  opt.max_iter = 1;
  EXPECT_FALSE(lasso_cd(d, 1e-4, opt).converged);
  EXPECT_THROW(lasso_cd(d, -1.0), DomainError);
  EXPECT_THROW(lasso_cd(d, std::nan("")), DomainError);
}

TEST(LassoGrid, LogSpaced) {
  const auto g = lasso_lambda_grid(2.0);
  ASSERT_EQ(g.size(), 100u);
  EXPECT_DOUBLE_EQ(g.front(), 2.0);
  EXPECT_NEAR(g.back(), 2e-4, 1e-15);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(1e-4, 1.0 / 99.0), 1e-12);
}

TEST(CvLasso, DeterministicAndBalancedFolds) {
  const auto d = toy_data(57, 7, 5);
  const auto f1 = lasso_fold_assignment(57, 10, 3);
  EXPECT_EQ(f1, lasso_fold_assignment(57, 10, 3));
  EXPECT_NE(f1, lasso_fold_assignment(57, 10, 4));
  std::vector<int> sizes(10, 0);
  for (auto f : f1) ++sizes[f];
  for (int s : sizes) EXPECT_TRUE(s == 5 || s == 6);

  const auto a = cv_lasso(d, 10, {}, 3);
  const auto b = cv_lasso(d, 10, {}, 3);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.beta, b.beta);
  ASSERT_EQ(a.cv_curve.size(), 100u);
  for (const auto& pt : a.cv_curve) EXPECT_TRUE(std::isfinite(pt.cv_error) && pt.cv_error >= 0.0);
  const auto best = std::min_element(a.cv_curve.begin(), a.cv_curve.end(),
                                     [](const CvPoint& x, const CvPoint& y) { return x.cv_error < y.cv_error; });
  EXPECT_EQ(a.lambda, best->lambda);
  EXPECT_TRUE(a.converged);
  expect_kkt(d, a.beta, a.lambda);
}

TEST(CvLasso, NoiselessSparseBeatsNull) {
  Rng rng = derive_stream(11);
  RegressionDataset d;
  d.X.resize(80, 15);
  for (Index i = 0; i < 80; ++i) {
    for (Index j = 0; j < 15; ++j) d.X(i, j) = rand::normal(rng);
  }
  VectorXd beta = VectorXd::Zero(15);
  beta(2) = 3.0;
  beta(9) = -1.5;
  d.y = d.X * beta;
  d.true_beta = beta;
  d.design_cov = MatrixXd::Identity(15, 15);
  const auto fit = cv_lasso(d, 10, {}, 1);
  EXPECT_LT(model_error(fit.beta, d), 1e-2 * model_error(VectorXd::Zero(15), d));
}

TEST(CvLasso, UsageErrors) {
  const auto d = toy_data(8, 3, 6);
  EXPECT_THROW(cv_lasso(d, 10), UsageError);
  EXPECT_THROW(cv_lasso(d, 1), UsageError);
  EXPECT_THROW(cv_lasso(d, 4, {0.1, -0.2}), DomainError);
  EXPECT_NO_THROW(cv_lasso(d, 8));
}
