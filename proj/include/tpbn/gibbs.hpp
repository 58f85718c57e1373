#pragma once

// Blocked Gibbs sampler for y = X beta + eps under the TPB normal scale
// mixture prior in its gamma-gamma hierarchy:
//   beta_j ~ N(0, sigma^2 tau_j), tau_j ~ G(a, lambda_j), lambda_j ~ G(b, phi),
//   optionally phi ~ G(1/2, omega), omega ~ G(1/2, 1); sigma^-2 ~ G(c0/2, d0/2).
// Scan order: beta, sigma^-2, tau, lambda, phi, omega.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"
#include "tpbn/gig.hpp"
#include "tpbn/linalg.hpp"
#include "tpbn/model.hpp"
#include "tpbn/random.hpp"
#include "tpbn/report.hpp"

namespace tpbn {

struct GibbsState {
  VectorXd beta;
  double sigma2_inv = 1.0;
  VectorXd tau;
  VectorXd lambda;
  double phi = 1.0;
  double omega = 1.0;
};

struct GibbsSchedule {
  std::size_t total = 10000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  /// Store full state snapshots; when false only running moments are kept.
  bool keep_draws = true;

  void validate() const {
    detail::require_usage(thin >= 1, "gibbs schedule: thin must be at least 1");
    detail::require_usage(total > burn_in, "gibbs schedule: total iterations must exceed burn-in");
  }
  [[nodiscard]] std::size_t stored_count() const { return (total - burn_in) / thin; }
};

struct GibbsChain {
  std::vector<GibbsState> draws;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::size_t total_iterations = 0;
  std::uint64_t seed = 0;
};

struct GibbsResult {
  GibbsChain chain;
  FitReport report;
  GibbsState last_state;  ///< state after the final sweep; kept even without stored draws
};

/// Raised when a sweep fails; carries how far the chain got.
class ChainAborted : public NumericalError {
 public:
  ChainAborted(const std::string& what, std::size_t iteration, std::size_t stored)
      : NumericalError(what), iteration_(iteration), stored_(stored) {}
  [[nodiscard]] std::size_t iteration() const { return iteration_; }
  [[nodiscard]] std::size_t stored() const { return stored_; }

 private:
  std::size_t iteration_;
  std::size_t stored_;
};

/// Blocks held fixed during a sweep; used to check conjugate sub-chains.
struct GibbsFreeze {
  bool sigma2 = false;
  bool scales = false;  ///< tau, lambda, phi and omega
};

/// Floor on beta_j^2 / sigma^2 before the tau draw, keeping xi > 0.
inline constexpr double kGibbsXiFloor = 1e-12;

inline GibbsState gibbs_initial_state(const RegressionDataset& data, const PriorConfig& prior) {
  const Index p = data.p();
  GibbsState s;
  s.beta = VectorXd::Zero(p);
  s.sigma2_inv = 1.0 / response_variance(data.y);
  s.tau = VectorXd::Ones(p);
  s.lambda = VectorXd::Ones(p);
  s.phi = prior.hierarchical_phi() ? 1.0 : prior.tpb.fixed_phi();
  s.omega = 1.0;
  return s;
}

namespace detail {

// beta ~ N(A^-1 X'y, sigma^2 A^-1), A = X'X + diag(1/tau).
inline VectorXd draw_beta(const VectorXd& tau, double sigma2_inv, const RegressionDataset& data,
                          const SufficientStats& stats, Rng& rng) {
  const Index n = data.n();
  const Index p = data.p();
  const double sigma = 1.0 / std::sqrt(sigma2_inv);
  if (p <= n) {
    MatrixXd a = stats.xtx;
    a.diagonal().array() += tau.array().inverse();
    const auto llt = robust_llt(std::move(a), "gibbs beta update");
    VectorXd z(p);
    for (Index j = 0; j < p; ++j) z(j) = rand::normal(rng);
    VectorXd beta = llt.solve(stats.xty);
    beta += sigma * llt.matrixU().solve(z);
    return beta;
  }
  // p > n: exact draw through the n x n system (Bhattacharya et al., 2016) on
  // the scaled coefficients b = beta / sigma.
  VectorXd u(p);
  for (Index j = 0; j < p; ++j) u(j) = std::sqrt(tau(j)) * rand::normal(rng);
  VectorXd delta(n);
  for (Index i = 0; i < n; ++i) delta(i) = rand::normal(rng);
  const VectorXd sqrt_tau = tau.cwiseSqrt();
  const MatrixXd xs = data.X * sqrt_tau.asDiagonal();
  MatrixXd m = MatrixXd::Identity(n, n);
  m.selfadjointView<Eigen::Lower>().rankUpdate(xs);
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  const auto llt = robust_llt(std::move(m), "gibbs beta update (n x n route)");
  const VectorXd v = data.X * u + delta;
  const VectorXd w = llt.solve(data.y / sigma - v);
  VectorXd b = u + tau.cwiseProduct(data.X.transpose() * w);
  return sigma * b;
}

}  // namespace detail

/// tau_j | . ~ GIG(a - 1/2, 2 lambda_j, beta_j^2 / sigma^2).
inline double draw_tau(double beta_j, double sigma2_inv, double lambda_j, double a, Rng& rng) {
  const double xi = std::max(beta_j * beta_j * sigma2_inv, kGibbsXiFloor);
  return detail::clamp_positive(gig_sample(GigParams{a - 0.5, 2.0 * lambda_j, xi}, rng));
}

/// lambda_j | . ~ G(a + b, tau_j + phi).
inline double draw_lambda(double tau_j, double phi, double a, double b, Rng& rng) {
  return detail::clamp_positive(rand::gamma(rng, a + b, tau_j + phi));
}

/// One systematic-scan sweep.
inline GibbsState gibbs_step(const GibbsState& state, const RegressionDataset& data, const SufficientStats& stats,
                             const PriorConfig& prior, Rng& rng, GibbsFreeze freeze = {}) {
  const Index n = data.n();
  const Index p = data.p();
  const double a = prior.tpb.a;
  const double b = prior.tpb.b;
  GibbsState next = state;

  next.beta = detail::draw_beta(state.tau, state.sigma2_inv, data, stats, rng);
  if (!next.beta.allFinite()) {
    std::ostringstream msg;
    msg << "gibbs: non-finite coefficient draw (sigma^-2=" << state.sigma2_inv << ")";
    throw NumericalError(msg.str());
  }

  if (!freeze.sigma2) {
    const VectorXd resid = data.y - data.X * next.beta;
    const double penalty = next.beta.cwiseAbs2().cwiseQuotient(state.tau).sum();
    const double shape = 0.5 * (static_cast<double>(n + p) + prior.c0);
    const double rate = 0.5 * (resid.squaredNorm() + penalty + prior.d0);
    next.sigma2_inv = detail::clamp_positive(rand::gamma(rng, shape, rate));
  }
  if (freeze.scales) return next;

  for (Index j = 0; j < p; ++j) next.tau(j) = draw_tau(next.beta(j), next.sigma2_inv, state.lambda(j), a, rng);
  for (Index j = 0; j < p; ++j) next.lambda(j) = draw_lambda(next.tau(j), state.phi, a, b, rng);
  if (prior.hierarchical_phi()) {
    next.phi = detail::clamp_positive(
        rand::gamma(rng, static_cast<double>(p) * b + 0.5, next.lambda.sum() + state.omega));
    next.omega = detail::clamp_positive(rand::gamma(rng, 1.0, next.phi + 1.0));
  }

  return next;
}

/// Runs one chain. Deterministic given the seed.
inline GibbsResult run_gibbs(const RegressionDataset& data, const PriorConfig& prior, const GibbsSchedule& schedule,
                             std::uint64_t seed) {
  data.validate();
  prior.validate();
  schedule.validate();
  Stopwatch clock;
  const SufficientStats stats = build_stats(data);
  const Index p = data.p();
  Rng rng = derive_stream(seed, 0, 0x61bb5);

  GibbsResult out;
  out.chain.burn_in = schedule.burn_in;
  out.chain.thin = schedule.thin;
  out.chain.total_iterations = schedule.total;
  out.chain.seed = seed;
  if (schedule.keep_draws) out.chain.draws.reserve(schedule.stored_count());

  VectorXd sum_beta = VectorXd::Zero(p);
  VectorXd sum_beta2 = VectorXd::Zero(p);
  double sum_sigma2 = 0.0;
  double sum_phi = 0.0;
  std::size_t stored = 0;

  GibbsState state = gibbs_initial_state(data, prior);
  for (std::size_t it = 1; it <= schedule.total; ++it) {
    try {
      state = gibbs_step(state, data, stats, prior, rng);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " [iteration " << it << ", " << stored << " draws stored]";
      throw ChainAborted(msg.str(), it, stored);
    }
    if (it > schedule.burn_in && (it - schedule.burn_in) % schedule.thin == 0) {
      ++stored;
      sum_beta += state.beta;
      sum_beta2 += state.beta.cwiseAbs2();
      sum_sigma2 += 1.0 / state.sigma2_inv;
      sum_phi += state.phi;
      if (schedule.keep_draws) out.chain.draws.push_back(state);
    }
  }

  out.last_state = state;
  FitReport& rep = out.report;
  rep.method = "gibbs";
  const double m = static_cast<double>(stored);
  rep.beta = sum_beta / m;
  rep.beta_sd = (sum_beta2 / m - rep.beta.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  rep.sigma2 = sum_sigma2 / m;
  rep.phi = sum_phi / m;
  rep.iterations = schedule.total;
  rep.draws = stored;
  rep.seed = seed;
  if (schedule.keep_draws && stored > 0) {
    rep.beta_lower.resize(p);
    rep.beta_upper.resize(p);
    std::vector<double> column(stored);
    for (Index j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < stored; ++k) column[k] = out.chain.draws[k].beta(j);
      std::sort(column.begin(), column.end());
      auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(stored - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, stored - 1);
        return column[lo] + (pos - static_cast<double>(lo)) * (column[hi] - column[lo]);
      };
      rep.beta_lower(j) = quantile(0.025);
      rep.beta_upper(j) = quantile(0.975);
    }
  }
  rep.wall_seconds = clock.seconds();
  return out;
}

}  // namespace tpbn
