#pragma once

// MAP estimation of (beta, sigma^2) by EM with the prior variances tau_j as
// missing data. Under the inverted-beta hierarchy
//   pi(tau) ∝ tau^(a-1) (1 + tau/phi)^(-(a+b)),
// the substitution u = tau/(tau + phi) turns pi into Beta(a, b) on (0,1), and
// every E-step integral becomes
//   J(alpha, gamma, K) = int_0^1 u^alpha (1-u)^gamma exp(-K (1-u)/u) du,
// with K = beta^2 / (2 sigma^2 phi).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "tpbn/errors.hpp"
#include "tpbn/linalg.hpp"
#include "tpbn/model.hpp"
#include "tpbn/report.hpp"
#include "tpbn/tpb.hpp"

namespace tpbn {

struct EmState {
  VectorXd beta;
  double sigma2 = 1.0;
  VectorXd weights;  ///< <tau_j^-1> from the last E-step
  double log_posterior = 0.0;
  std::vector<bool> active;

  [[nodiscard]] std::size_t active_count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
  }
};

struct EmOptions {
  double tol = 1e-10;
  std::size_t max_iter = 5000;
  double zero_beta = 1e-8;     ///< screening needs |beta_j| below this
  double zero_weight = 1e12;   ///< ... and the E-step weight above this
  bool track_objective = true; ///< evaluate and check the log posterior each iteration
  bool closed_form_a1 = true;  ///< use the a = 1 fast path in the E-step
};

struct EmResult {
  EmState state;
  FitReport report;
  std::vector<double> objective_trace;
  std::vector<std::size_t> active_trace;  ///< active count behind each objective_trace entry
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
std::pair<double, double> em_quadrature(F&& f, double lo, double hi) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  auto guarded = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  double err = 0.0;
  const double val = integrator.integrate(guarded, lo, hi, 1e-14, &err);
  return {val, err};
}

/// log J(alpha, gamma, K); requires gamma > -1, and alpha > -1 when K = 0.
inline double em_log_j(double alpha, double gamma, double k) {
  if (k == 0.0) return alpha <= -1.0 ? kInf : log_beta_fn(alpha + 1.0, gamma + 1.0);
  // Integrate exp(h(s)) over s = log u in (-inf, 0), h(s) = g(e^s) + s with
  // g(u) = alpha log u + gamma log(1-u) - K (1-u)/u.
  auto h = [&](double s) {
    const double one_minus_u = -std::expm1(s);
    return (alpha + 1.0) * s + gamma * std::log(one_minus_u) - k * one_minus_u * std::exp(-s);
  };

  // Critical points: (alpha+1+gamma) u^2 + (K-alpha-1) u - K = 0.
  std::vector<double> crit;
  const double qa = alpha + 1.0 + gamma;
  const double qb = k - alpha - 1.0;
  const double qc = -k;
  if (std::abs(qa) < 1e-14 * std::max(1.0, std::abs(qb))) {
    if (qb != 0.0) crit.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      if (q != 0.0) {
        crit.push_back(q / qa);
        crit.push_back(qc / q);
      }
    }
  }
  std::erase_if(crit, [](double u) { return !(u > 0.0 && u < 1.0); });
  std::sort(crit.begin(), crit.end());
  std::vector<double> cuts;
  for (double u : crit) cuts.push_back(std::log(u));
  if (cuts.empty()) cuts.push_back(std::log(0.5));

  double scale = gamma <= 0.0 ? 0.0 : -kInf;
  for (double c : cuts) scale = std::max(scale, h(c));

  // h -> -inf super-exponentially as s -> -inf; walk left until negligible.
  double lo = cuts.front() - 1.0;
  for (double step = 1.0; h(lo) - scale > -745.0; step *= 2.0) lo -= step;

  // Bracket narrow peaks by their curvature width, and the e^{-s} cliff at s = log K.
  std::vector<double> extra;
  for (double c : cuts) {
    const double e = std::exp(c);
    const double curv = gamma * e / ((1.0 - e) * (1.0 - e)) + k / e;
    if (curv > 0.0) {
      const double w = 1.0 / std::sqrt(curv);
      extra.push_back(c + 8.0 * w);
      // Geometric cuts across the left tail when it spans many scales.
      for (double d = 8.0 * w; c - d > lo; d *= 4.0) extra.push_back(c - d);
    }
  }
  // Mass piled against u = 1 has width about 1/K in s.
  if (k > 1.0) {
    for (double d = 1.0 / k; -d > lo; d *= 4.0) extra.push_back(-d);
  }
  if (k < 1.0) {
    const double cliff = std::log(k);
    extra.insert(extra.end(), {cliff - 3.0, cliff, cliff + 3.0});
  }
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  std::erase_if(cuts, [lo](double c) { return !(c > lo && c < 0.0); });
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), lo);
  cuts.push_back(0.0);
  // Slivers give meaningless error estimates.
  std::vector<double> merged{cuts.front()};
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] - merged.back() > 1e-9 * std::max(std::abs(cuts[i]), std::abs(merged.back()))) {
      merged.push_back(cuts[i]);
    } else if (i + 1 == cuts.size()) {
      merged.back() = cuts[i];
    }
  }
  cuts = std::move(merged);

  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Mapped onto [0, 1] so the error floor scales with the piece.
    const double a = cuts[i];
    const double width = cuts[i + 1] - a;
    const auto [piece, piece_err] =
        em_quadrature([&](double t) { return width * std::exp(h(a + width * t) - scale); }, 0.0, 1.0);
    total += piece;
    err += piece_err;
  }
  if (!std::isfinite(total) || !(total > 0.0) || err > 1e-9 * total) {
    std::ostringstream msg;
    msg << "map e-step: quadrature did not converge (alpha=" << alpha << ", gamma=" << gamma << ", K=" << k
        << ", integral=" << total << ", error=" << err << ")";
    throw NumericalError(msg.str());
  }
  return scale + std::log(total);
}

// r_nu(t) = J_{nu+1}(t) / J_nu(t), J_nu(t) = int_0^inf v^nu exp(-v^2 - t v) dv.
inline double gauss_exp_moment_ratio(double nu, double t) {
  if (t < 3.0) {
    // J_nu(t) = (1/2) sum_k (-t)^k / k! Gamma((nu + k + 1)/2)
    auto series = [t](double order) {
      double sum = 0.0;
      const double lt = t > 0.0 ? std::log(t) : -kInf;
      for (int k = 0; k < 400; ++k) {
        const double term =
            k == 0 ? std::exp(std::lgamma(0.5 * (order + 1.0)))
                   : std::exp(std::lgamma(0.5 * (order + k + 1.0)) + k * lt - std::lgamma(k + 1.0));
        sum += (k % 2 == 0) ? term : -term;
        if (k > 4 && term < 1e-18 * std::abs(sum)) break;
        if (t == 0.0) break;
      }
      return 0.5 * sum;
    };
    return series(nu + 1.0) / series(nu);
  }
  // Backward recurrence r_nu = (nu + 1) / (t + 2 r_{nu+1}), started from the
  // fixed point of the recurrence at a deep level; errors contract per step.
  constexpr int kDepth = 400;
  const double top = nu + kDepth;
  double r = (-t + std::sqrt(t * t + 8.0 * (top + 1.0))) / 4.0;
  for (int k = kDepth - 1; k >= 0; --k) r = (nu + k + 1.0) / (t + 2.0 * r);
  return r;
}

}  // namespace detail

/// log of the marginal prior density of beta_j given sigma^2, tau integrated out.
inline double log_marginal_prior(double beta, double sigma2, const TpbParams& params) {
  params.validate();
  const double phi = params.fixed_phi();
  detail::require_domain(sigma2 > 0.0, "log_marginal_prior: sigma2 must be positive");
  const double k = beta * beta / (2.0 * sigma2 * phi);
  return -detail::log_beta_fn(params.a, params.b) - 0.5 * std::log(2.0 * std::numbers::pi * sigma2 * phi) +
         detail::em_log_j(params.a - 1.5, params.b - 0.5, k);
}

/// E[tau^-1 | beta_j, sigma^2]. +inf at beta_j = 0 when a <= 3/2.
inline double e_step_weight(double beta, double sigma2, const TpbParams& params, bool closed_form_a1 = true) {
  params.validate();
  const double phi = params.fixed_phi();
  detail::require_domain(sigma2 > 0.0 && std::isfinite(beta), "e_step_weight: needs finite beta and sigma2 > 0");
  const double a = params.a;
  const double b = params.b;
  if (closed_form_a1 && a == 1.0) {
    // Given lambda the conditional of tau^-1 is inverse Gaussian; averaging
    // sqrt(2 lambda) over lambda | beta leaves the ratio r_{2b}.
    if (beta == 0.0) return detail::kInf;
    const double sigma = std::sqrt(sigma2);
    const double t = std::sqrt(2.0) * std::abs(beta) / (sigma * std::sqrt(phi));
    return std::sqrt(2.0) * sigma / (std::abs(beta) * std::sqrt(phi)) * detail::gauss_exp_moment_ratio(2.0 * b, t);
  }
  const double k = beta * beta / (2.0 * sigma2 * phi);
  if (k == 0.0 && a <= 1.5) return detail::kInf;
  const double log_num = detail::em_log_j(a - 2.5, b + 0.5, k);
  const double log_den = detail::em_log_j(a - 1.5, b - 0.5, k);
  return std::exp(log_num - log_den) / phi;
}

/// Joint mode of (beta, sigma^2) given E-step weights. Inactive coordinates
/// and coordinates with infinite weight are pinned at zero.
inline std::pair<VectorXd, double> m_step(const VectorXd& weights, const std::vector<bool>& active,
                                          const SufficientStats& stats, const PriorConfig& prior) {
  const Index p = stats.p();
  detail::require_usage(weights.size() == p && static_cast<Index>(active.size()) == p,
                        "m_step: weights and active mask must have length p");
  std::vector<Index> free;
  std::size_t p_active = 0;
  for (Index j = 0; j < p; ++j) {
    if (!active[static_cast<std::size_t>(j)]) continue;
    ++p_active;
    detail::require_domain(weights(j) > 0.0, "m_step: weights must be positive on the active set");
    if (std::isfinite(weights(j))) free.push_back(j);
  }
  VectorXd beta = VectorXd::Zero(p);
  double penalty = 0.0;
  if (!free.empty()) {
    const auto m = static_cast<Index>(free.size());
    MatrixXd a = stats.xtx(free, free);
    VectorXd w(m);
    for (Index i = 0; i < m; ++i) w(i) = weights(free[static_cast<std::size_t>(i)]);
    a.diagonal() += w;
    const auto llt = detail::robust_llt(std::move(a), "map m-step");
    const VectorXd sol = llt.solve(VectorXd(stats.xty(free)));
    for (Index i = 0; i < m; ++i) beta(free[static_cast<std::size_t>(i)]) = sol(i);
    penalty = sol.cwiseAbs2().dot(w);
  }
  const double rss = std::max(stats.yty - 2.0 * beta.dot(stats.xty) + beta.dot(stats.xtx * beta), 0.0);
  const double denom = static_cast<double>(stats.n) + static_cast<double>(p_active) + prior.c0 + 2.0;
  const double sigma2 = (rss + penalty + prior.d0) / denom;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw NumericalError("map m-step: non-positive error variance");
  return {beta, sigma2};
}

/// Log posterior of (beta, sigma^2) up to a constant, tau integrated out,
/// over the active coordinates.
inline double em_log_posterior(const VectorXd& beta, double sigma2, const std::vector<bool>& active,
                               const SufficientStats& stats, const PriorConfig& prior) {
  const double n = static_cast<double>(stats.n);
  const double rss = std::max(stats.yty - 2.0 * beta.dot(stats.xty) + beta.dot(stats.xtx * beta), 0.0);
  double lp = -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) - rss / (2.0 * sigma2);
  for (Index j = 0; j < beta.size(); ++j) {
    if (active[static_cast<std::size_t>(j)]) lp += log_marginal_prior(beta(j), sigma2, prior.tpb);
  }
  lp += -(0.5 * prior.c0 + 1.0) * std::log(sigma2) - prior.d0 / (2.0 * sigma2);
  return lp;
}

inline EmResult run_em(const RegressionDataset& data, const PriorConfig& prior, const EmOptions& options = {}) {
  data.validate();
  prior.validate();
  detail::require_usage(!prior.hierarchical_phi(), "map: requires a fixed phi (a value or auto calibration)");
  detail::require_usage(options.tol > 0.0, "map: tol must be positive");
  Stopwatch clock;
  const SufficientStats stats = build_stats(data);
  const Index p = data.p();

  EmResult out;
  EmState& st = out.state;
  if (prior.tpb.a > 1.0) {
    out.report.warnings.push_back("map: a > 1, exact zeros are impossible (sparsity needs 0 < a <= 1)");
  }
  st.active.assign(static_cast<std::size_t>(p), true);
  st.weights = VectorXd::Ones(p);
  std::tie(st.beta, st.sigma2) = m_step(st.weights, st.active, stats, prior);
  if (options.track_objective) {
    st.log_posterior = em_log_posterior(st.beta, st.sigma2, st.active, stats, prior);
    out.objective_trace.push_back(st.log_posterior);
    out.active_trace.push_back(st.active_count());
  }

  bool converged = false;
  std::size_t it = 0;
  while (it < options.max_iter) {
    ++it;
    bool screened = false;
    for (Index j = 0; j < p; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      if (!st.active[idx]) continue;
      st.weights(j) = e_step_weight(st.beta(j), st.sigma2, prior.tpb, options.closed_form_a1);
      if (std::abs(st.beta(j)) < options.zero_beta && st.weights(j) > options.zero_weight) {
        st.active[idx] = false;
        screened = true;
      }
    }
    auto [beta, sigma2] = m_step(st.weights, st.active, stats, prior);
    if (options.track_objective) {
      const double lp = em_log_posterior(beta, sigma2, st.active, stats, prior);
      const double slack = 1e-10 * (1.0 + std::abs(st.log_posterior));
      if (!screened && lp < st.log_posterior - slack) {
        std::ostringstream msg;
        msg << "map: log posterior decreased at iteration " << it << " (" << st.log_posterior << " -> " << lp << ")";
        throw InternalError(msg.str());
      }
      st.log_posterior = lp;
      out.objective_trace.push_back(lp);
      out.active_trace.push_back(st.active_count());
    }
    const double change = p > 0 ? (beta - st.beta).cwiseAbs().maxCoeff() : 0.0;
    st.beta = std::move(beta);
    st.sigma2 = sigma2;
    if (change < options.tol) {
      converged = true;
      break;
    }
  }

  FitReport& rep = out.report;
  rep.method = "map";
  rep.beta = st.beta;
  rep.sigma2 = st.sigma2;
  rep.phi = prior.tpb.fixed_phi();
  rep.iterations = it;
  rep.converged = converged;
  if (!converged) rep.warnings.push_back("map: max_iter reached before convergence");
  rep.wall_seconds = clock.seconds();
  return out;
}

}  // namespace tpbn
