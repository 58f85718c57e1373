#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tpbn/varbayes.hpp"

using namespace tpbn;

namespace {

RegressionDataset sparse_problem(Index n, Index p, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0, 5);
  RegressionDataset d;
  d.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.X(i, j) = rand::normal(rng);
  }
  VectorXd beta = VectorXd::Zero(p);
  for (Index j = 0; j < std::min<Index>(3, p); ++j) beta(j) = 3.0 - static_cast<double>(j);
  d.y = d.X * beta;
  for (Index i = 0; i < n; ++i) d.y(i) += rand::normal(rng);
  return d;
}

void expect_positive(const VbState& s) {
  EXPECT_TRUE(s.mean_beta.allFinite());
  EXPECT_TRUE((s.mean_tau.array() > 0).all() && s.mean_tau.allFinite());
  EXPECT_TRUE((s.mean_tau_inv.array() > 0).all() && s.mean_tau_inv.allFinite());
  EXPECT_TRUE((s.mean_lambda.array() > 0).all() && s.mean_lambda.allFinite());
  EXPECT_TRUE((s.var_beta.array() > 0).all() && s.var_beta.allFinite());
  EXPECT_TRUE(s.mean_prec > 0 && std::isfinite(s.mean_prec));
  EXPECT_TRUE(s.mean_phi > 0 && std::isfinite(s.mean_phi));
  EXPECT_TRUE(s.mean_omega > 0 && std::isfinite(s.mean_omega));
  EXPECT_TRUE(s.c_star > 0 && s.d_star > 0);
}

}  // namespace

TEST(VbTauMoments, UnitShapeShortcut) {
  for (double lambda : {1e-3, 0.5, 40.0}) {
    for (double xi : {1e-200, 1e-8, 0.3, 25.0}) {
      const auto [t, ti] = vb_tau_moments(1.0, lambda, xi);
      EXPECT_LE(oracle::rel_diff(ti, std::sqrt(2 * lambda / xi)), 1e-14);
      const auto [tg, tig] = vb_tau_moments(1.0, lambda, xi, false);
      EXPECT_LE(oracle::rel_diff(t, tg), 1e-10) << lambda << " " << xi;
      EXPECT_LE(oracle::rel_diff(ti, tig), 1e-10) << lambda << " " << xi;
    }
  }
}

TEST(VbTauMoments, GenericShapeMatchesQuadrature) {
  const double a = 0.7;
  for (double lambda : {0.2, 1.0, 6.0}) {
    for (double xi : {0.01, 0.5, 4.0}) {
      const double mu = a - 0.5;
      const double nu = 2 * lambda;
      // Integrate in log tau.
      auto kern = [&](double y, double power) {
        return std::exp((mu + power) * y - 0.5 * (nu * std::exp(y) + xi * std::exp(-y)));
      };
      const double z = oracle::integrate([&](double y) { return kern(y, 0); }, -60, 40, 1e-14);
      const double m1 = oracle::integrate([&](double y) { return kern(y, 1); }, -60, 40, 1e-14);
      const double mi = oracle::integrate([&](double y) { return kern(y, -1); }, -60, 40, 1e-14);
      const auto [t, ti] = vb_tau_moments(a, lambda, xi);
      EXPECT_LE(oracle::rel_diff(t, m1 / z), 1e-8);
      EXPECT_LE(oracle::rel_diff(ti, mi / z), 1e-8);
    }
  }
}

TEST(VbStep, LambdaUpdateFormula) {
  EXPECT_DOUBLE_EQ((0.5 + 0.5) / (1.0 + 1.0), 0.5);
  const auto data = sparse_problem(30, 5, 1);
  const auto stats = build_stats(data);
  const PriorConfig prior{TpbParams::fixed(0.5, 0.5, 1.0), 0, 0};
  const auto s0 = vb_initial_state(data, prior);
  const auto s1 = vb_step(s0, data, stats, prior);
  for (Index j = 0; j < 5; ++j) {
    EXPECT_DOUBLE_EQ(s1.mean_lambda(j), 1.0 / (s1.mean_tau(j) + s0.mean_phi));
  }
  EXPECT_DOUBLE_EQ(s1.mean_omega, 1.0 / (s1.mean_phi + 1.0));
  EXPECT_DOUBLE_EQ(s1.mean_phi, 1.0);
}

TEST(VbStep, OrthonormalRidgeWithUnitScales) {
  Rng rng = derive_stream(2);
  MatrixXd g(12, 4);
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 4; ++j) g(i, j) = rand::normal(rng);
  }
  RegressionDataset data;
  data.X = Eigen::HouseholderQR<MatrixXd>(g).householderQ() * MatrixXd::Identity(12, 4);
  data.y = VectorXd::LinSpaced(12, -2, 3);
  const auto stats = build_stats(data);
  const PriorConfig prior{TpbParams::fixed(1.0, 1.0, 1.0), 0, 0};
  auto s = vb_initial_state(data, prior);
  s.mean_tau_inv.setOnes();
  const auto next = vb_step(s, data, stats, prior);
  EXPECT_LE((next.mean_beta - stats.xty / 2.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VbStep, ScaleUpdateUsesRowQuadraticForms) {
  const auto data = sparse_problem(20, 4, 3);
  const auto stats = build_stats(data);
  const PriorConfig prior{TpbParams::fixed(0.5, 0.5, 1.0), 1.0, 0.5};
  auto s = vb_initial_state(data, prior);
  s = vb_step(s, data, stats, prior);
  const auto next = vb_step(s, data, stats, prior);
  // sum_i x_i' <beta beta'> x_i with <beta beta'> = V + <beta><beta>'
  const MatrixXd outer = next.cov_beta + next.mean_beta * next.mean_beta.transpose();
  double quad = 0.0;
  for (Index i = 0; i < 20; ++i) quad += data.X.row(i) * outer * data.X.row(i).transpose();
  double pen = 0.0;
  for (Index j = 0; j < 4; ++j) pen += outer(j, j) * s.mean_tau_inv(j);
  const double d_ref = 0.5 * (stats.yty - 2.0 * data.y.dot(data.X * next.mean_beta) + quad + pen + prior.d0);
  EXPECT_LE(oracle::rel_diff(next.d_star, d_ref), 1e-12);
  EXPECT_DOUBLE_EQ(next.c_star, 0.5 * (20 + 4 + 1.0));
  EXPECT_DOUBLE_EQ(next.mean_prec, next.c_star / next.d_star);
}

TEST(VbStep, WideRouteMatchesDirectAlgebra) {
  const auto data = sparse_problem(8, 15, 4);
  const auto stats = build_stats(data);
  const PriorConfig prior{TpbParams::half_cauchy(0.5, 0.5), 0, 0};
  auto s = vb_initial_state(data, prior);
  s.mean_tau_inv = VectorXd::LinSpaced(15, 0.2, 4.0);
  s.mean_prec = 0.7;
  const auto next = vb_step(s, data, stats, prior);
  MatrixXd a = stats.xtx;
  a.diagonal() += s.mean_tau_inv;
  const MatrixXd a_inv = a.inverse();
  const VectorXd mean = a_inv * stats.xty;
  EXPECT_LE((next.mean_beta - mean).cwiseAbs().maxCoeff(), 1e-9 * mean.cwiseAbs().maxCoeff());
  EXPECT_LE((next.var_beta - a_inv.diagonal() / 0.7).cwiseAbs().maxCoeff(), 1e-9);
  const MatrixXd outer = a_inv / 0.7 + mean * mean.transpose();
  double quad = 0.0;
  for (Index i = 0; i < 8; ++i) quad += data.X.row(i) * outer * data.X.row(i).transpose();
  const double pen = (outer.diagonal().array() * s.mean_tau_inv.array()).sum();
  const double d_ref = 0.5 * (stats.yty - 2.0 * stats.xty.dot(mean) + quad + pen);
  EXPECT_LE(oracle::rel_diff(next.d_star, d_ref), 1e-9);
}

TEST(VbStep, NonFiniteInputNamesCoordinate) {
  const auto data = sparse_problem(20, 4, 5);
  const auto stats = build_stats(data);
  const PriorConfig prior{TpbParams::fixed(0.5, 0.5, 1.0), 0, 0};
  auto s = vb_initial_state(data, prior);
  s.mean_lambda(2) = std::numeric_limits<double>::infinity();
  try {
    vb_step(s, data, stats, prior);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 2"), std::string::npos) << e.what();
  }
}

TEST(RunVb, PositivityAfterEveryStep) {
  for (const auto& [n, p, hier] : {std::tuple{40, 10, false}, std::tuple{10, 30, true}, std::tuple{60, 5, true}}) {
    const auto data = sparse_problem(n, p, 6);
    const auto stats = build_stats(data);
    const PriorConfig prior{hier ? TpbParams::half_cauchy(0.5, 0.5) : TpbParams::fixed(1.0, 0.5, 1e-4), 0, 0};
    auto s = vb_initial_state(data, prior);
    for (int it = 0; it < 200; ++it) {
      s = vb_step(s, data, stats, prior);
      expect_positive(s);
      if (p <= n) {
        EXPECT_TRUE(s.cov_beta.isApprox(s.cov_beta.transpose(), 1e-12));
        EXPECT_EQ(Eigen::LLT<MatrixXd>(s.cov_beta).info(), Eigen::Success);
      }
    }
  }
}

TEST(RunVb, ConvergesToFixedPoint) {
  const auto data = sparse_problem(50, 12, 7);
  const PriorConfig prior{TpbParams::half_cauchy(0.5, 0.5), 0, 0};
  const VbOptions opt{1e-8, 10000};
  const auto r = run_vb(data, prior, opt);
  ASSERT_TRUE(r.report.converged);
  // Restarting from the fixed point stops after one cycle with no movement.
  const auto again = run_vb(data, prior, opt, r.state);
  EXPECT_EQ(again.report.iterations, std::size_t{1});
  EXPECT_LE(detail::rel_change(r.state.mean_beta, again.state.mean_beta), opt.tol);
  EXPECT_LE(detail::rel_change(r.state.mean_prec, again.state.mean_prec), opt.tol);
  const auto res = vb_residuals(r.state, data, build_stats(data), prior);
  for (const auto& [name, value] : res) EXPECT_LT(value, opt.tol) << name;
}

TEST(RunVb, DeterministicTrajectories) {
  const auto data = sparse_problem(30, 40, 8);
  const PriorConfig prior{TpbParams::half_cauchy(0.5, 0.5), 0, 0};
  const auto a = run_vb(data, prior);
  const auto b = run_vb(data, prior);
  EXPECT_EQ(a.state.mean_beta, b.state.mean_beta);
  EXPECT_EQ(a.state.mean_tau, b.state.mean_tau);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
  EXPECT_TRUE(a.report.converged) << a.report.iterations;
}

TEST(RunVb, NonConvergenceIsReportedNotThrown) {
  const auto data = sparse_problem(30, 6, 9);
  const PriorConfig prior{TpbParams::fixed(0.5, 0.5, 1.0), 0, 0};
  const auto r = run_vb(data, prior, {1e-8, 2});
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, std::size_t{2});
  EXPECT_FALSE(r.report.warnings.empty());
  EXPECT_THROW(run_vb(data, prior, {0.0, 10}), UsageError);
}

TEST(RunVb, RecoversPlantedSignals) {
  const auto data = sparse_problem(80, 20, 10);
  const PriorConfig prior{TpbParams::fixed(1.0, 0.5, calibrate_phi(1.0, 0.5, 0.5, 0.99)), 0, 0};
  const auto r = run_vb(data, prior);
  EXPECT_NEAR(r.report.beta(0), 3.0, 0.4);
  EXPECT_NEAR(r.report.beta(1), 2.0, 0.4);
  EXPECT_NEAR(r.report.beta(2), 1.0, 0.4);
  EXPECT_LT(r.report.beta.tail(17).cwiseAbs().maxCoeff(), 0.3);
}

TEST(RunVb, StartsFromGibbsDraw) {
  const auto data = sparse_problem(40, 6, 12);
  const PriorConfig prior{TpbParams::half_cauchy(0.5, 0.5), 0, 0};
  const auto g = run_gibbs(data, prior, {400, 100, 1, false}, 3);
  EXPECT_TRUE(g.chain.draws.empty());
  ASSERT_EQ(g.last_state.beta.size(), 6);
  const auto init = vb_state_from_draw(g.last_state, data, prior);
  EXPECT_EQ(init.mean_beta, g.last_state.beta);
  EXPECT_EQ(init.mean_tau, g.last_state.tau);
  EXPECT_EQ(init.mean_phi, g.last_state.phi);
  EXPECT_EQ(init.mean_prec, g.last_state.sigma2_inv);
  const auto warm = run_vb(data, prior, {}, init);
  const auto cold = run_vb(data, prior);
  ASSERT_TRUE(warm.report.converged);
  // Well-determined problem: both starts reach the same fixed point.
  EXPECT_LE((warm.report.beta - cold.report.beta).cwiseAbs().maxCoeff(), 1e-5);
  GibbsState bad = g.last_state;
  bad.tau.resize(3);
  EXPECT_THROW(vb_state_from_draw(bad, data, prior), UsageError);
}
