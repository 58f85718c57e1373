#pragma once

// Randomized regression designs, model error, and the relative-model-error
// benchmark against the cross-validated lasso.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpbn/errors.hpp"
#include "tpbn/gibbs.hpp"
#include "tpbn/lasso.hpp"
#include "tpbn/map_em.hpp"
#include "tpbn/model.hpp"
#include "tpbn/random.hpp"
#include "tpbn/varbayes.hpp"

namespace tpbn {

/// One randomized design. Coefficients are included with probability
/// q ~ Beta(q_alpha, q_beta): (1,1) is Case 1, (1,4) is Case 2.
struct CaseSpec {
  Index n = 50;
  Index p = 20;
  double q_alpha = 1.0;
  double q_beta = 1.0;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;

  static CaseSpec case1(Index n = 50, Index p = 20) { return {n, p, 1.0, 1.0}; }
  static CaseSpec case2(Index n = 250, Index p = 100) { return {n, p, 1.0, 4.0}; }

  void validate() const {
    detail::require_usage(n > 0 && p > 0, "case spec: n and p must be positive");
    detail::require_usage(q_alpha > 0.0 && q_beta > 0.0, "case spec: Beta parameters for q must be positive");
  }
};

namespace detail {

inline constexpr std::uint64_t kTagGenerate = 0x9e4e;
inline constexpr std::uint64_t kTagFit = 0xf17;
inline constexpr std::uint64_t kTagBootstrap = 0xb007;

// FNV-1a, used to key random streams by method label.
inline std::uint64_t label_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Linear interpolation between order statistics of a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Wishart(df, I) draw by the Bartlett decomposition; returns the lower factor L with C = L L'.
inline MatrixXd wishart_identity_factor(Index p, double df, Rng& rng) {
  MatrixXd l = MatrixXd::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    l(i, i) = std::sqrt(rand::chi_squared(rng, df - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) l(i, j) = rand::normal(rng);
  }
  return l;
}

/// Replicate `index` of a randomized design: C ~ W(p, I), x_i ~ N(0, C),
/// q ~ Beta, beta_j ~ Bernoulli(q) * U(0, 6), sigma ~ U(0, 6).
inline RegressionDataset gen_case(const CaseSpec& spec, std::uint64_t replicate_index) {
  spec.validate();
  Rng rng = derive_stream(spec.seed, replicate_index, detail::kTagGenerate);
  const Index n = spec.n;
  const Index p = spec.p;
  const MatrixXd l = wishart_identity_factor(p, static_cast<double>(p), rng);

  RegressionDataset d;
  d.design_cov = l * l.transpose();
  d.X.resize(n, p);
  VectorXd z(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(j) = rand::normal(rng);
    d.X.row(i) = (l * z).transpose();
  }
  const double q = rand::beta(rng, spec.q_alpha, spec.q_beta);
  VectorXd beta = VectorXd::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (rand::bernoulli(rng, q)) beta(j) = rand::uniform(rng, 0.0, 6.0);
  }
  const double sigma = rand::uniform(rng, 0.0, 6.0);
  d.y = d.X * beta;
  for (Index i = 0; i < n; ++i) d.y(i) += sigma * rand::normal(rng);
  d.true_beta = beta;
  d.noise_sd = sigma;
  return d;
}

/// Independent N(0,1) design with k coordinates of beta* set to signal_value.
/// design_cov is left empty (it is the identity).
inline RegressionDataset gen_highdim(Index n = 100, Index p = 10000, Index k_signals = 10, double signal_value = 3.0,
                                     double noise_sd = 3.0, std::uint64_t seed = 1,
                                     std::uint64_t replicate_index = 0) {
  detail::require_usage(n > 0 && p > 0, "gen_highdim: n and p must be positive");
  detail::require_usage(k_signals >= 0 && k_signals <= p, "gen_highdim: need 0 <= k_signals <= p");
  detail::require_usage(noise_sd >= 0.0, "gen_highdim: noise_sd must be non-negative");
  Rng rng = derive_stream(seed, replicate_index, detail::kTagGenerate);
  RegressionDataset d;
  d.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.X(i, j) = rand::normal(rng);
  }
  std::vector<Index> idx(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
  VectorXd beta = VectorXd::Zero(p);
  for (Index i = 0; i < k_signals; ++i) {
    const auto pick = std::uniform_int_distribution<Index>(i, p - 1)(rng);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick)]);
    beta(idx[static_cast<std::size_t>(i)]) = signal_value;
  }
  d.y = d.X * beta;
  for (Index i = 0; i < n; ++i) d.y(i) += noise_sd * rand::normal(rng);
  d.true_beta = beta;
  d.noise_sd = noise_sd;
  return d;
}

/// (beta* - beta_hat)' C (beta* - beta_hat).
inline double model_error(const VectorXd& beta_hat, const RegressionDataset& data) {
  if (!data.true_beta || !data.design_cov) throw UsageError("model_error: dataset lacks true_beta or design_cov");
  detail::require_usage(beta_hat.size() == data.true_beta->size(), "model_error: beta_hat does not conform to p");
  const VectorXd diff = *data.true_beta - beta_hat;
  return std::max(diff.dot(*data.design_cov * diff), 0.0);
}

/// Signal-to-noise ratio sqrt(beta*' C beta* / (tr(C)/p)) / sigma: the
/// signal standard deviation measured in units of the average predictor
/// variance. With C = I this is ||beta*|| / sigma.
inline double snr(const RegressionDataset& data) {
  if (!data.true_beta || !data.noise_sd) throw UsageError("snr: dataset lacks true_beta or noise_sd");
  const VectorXd& b = *data.true_beta;
  double signal2 = b.squaredNorm();
  if (data.design_cov) {
    const double avg_var = data.design_cov->trace() / static_cast<double>(b.size());
    signal2 = b.dot(*data.design_cov * b) / avg_var;
  }
  return std::sqrt(signal2) / *data.noise_sd;
}

// ---------------------------------------------------------------------------
// Benchmark

enum class Engine { lasso, vb, gibbs, map };

inline const char* engine_name(Engine e) {
  switch (e) {
    case Engine::lasso: return "lasso";
    case Engine::vb: return "vb";
    case Engine::gibbs: return "gibbs";
    case Engine::map: return "map";
  }
  return "?";
}

struct MethodSpec {
  Engine engine = Engine::lasso;
  TpbParams tpb;
  std::string label;  ///< unique name; keys the method's random streams

  static MethodSpec lasso() { return {Engine::lasso, {}, "lasso"}; }
};

struct BenchmarkOptions {
  std::size_t bootstrap = 2000;
  std::size_t folds = 10;
  GibbsSchedule gibbs{6000, 1000, 5, false};
  VbOptions vb;
  EmOptions em;
  double c0 = 0.0;
  double d0 = 0.0;
};

struct MetricsRecord {
  std::size_t replicate = 0;
  std::string method;
  double model_error = 0.0;
  double rme = 0.0;
  double snr = 0.0;
  std::size_t sparsity_count = 0;  ///< nonzero entries of beta*
  bool converged = true;
};

struct MethodSummary {
  std::string method;
  std::size_t records = 0;
  std::size_t failures = 0;
  double median_rme = 0.0;
  double boot_q025 = 0.0;
  double boot_q500 = 0.0;
  double boot_q975 = 0.0;
  std::vector<double> bootstrap;  ///< bootstrapped medians, sorted
};

struct FailureRecord {
  std::size_t replicate = 0;
  std::string method;
  std::string message;
};

struct BenchmarkResult {
  std::vector<MetricsRecord> records;
  std::vector<MethodSummary> summaries;
  std::vector<FailureRecord> failures;
};

/// Point estimate of one method on one dataset. Random streams depend on
/// (seed, replicate, label) only.
inline VectorXd fit_method(const MethodSpec& m, const RegressionDataset& data, const BenchmarkOptions& opt,
                           std::uint64_t seed, std::uint64_t replicate, bool* converged = nullptr) {
  const std::uint64_t stream_seed = splitmix64(seed ^ splitmix64(replicate ^ detail::label_hash(m.label)));
  const PriorConfig prior{m.tpb, opt.c0, opt.d0};
  bool ok = true;
  VectorXd beta;
  switch (m.engine) {
    case Engine::lasso: {
      auto fit = cv_lasso(data, opt.folds, {}, stream_seed);
      ok = fit.converged;
      beta = std::move(fit.beta);
      break;
    }
    case Engine::vb: {
      auto res = run_vb(data, prior, opt.vb);
      ok = res.report.converged;
      beta = std::move(res.report.beta);
      break;
    }
    case Engine::gibbs: {
      auto res = run_gibbs(data, prior, opt.gibbs, stream_seed);
      beta = std::move(res.report.beta);
      break;
    }
    case Engine::map: {
      auto res = run_em(data, prior, opt.em);
      ok = res.report.converged;
      beta = std::move(res.report.beta);
      break;
    }
  }
  if (converged) *converged = ok;
  return beta;
}

/// Per replicate: generate, fit every method, compute ME and RME against the
/// lasso; then bootstrap the median RME per method. Failing fits are recorded
/// and excluded.
inline BenchmarkResult run_benchmark(const CaseSpec& spec, std::vector<MethodSpec> methods,
                                     const BenchmarkOptions& opt = {}) {
  spec.validate();
  const auto has_lasso = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
    return m.engine == Engine::lasso;
  });
  if (!has_lasso) methods.insert(methods.begin(), MethodSpec::lasso());
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i].label.empty()) methods[i].label = engine_name(methods[i].engine);
    for (std::size_t j = 0; j < i; ++j) {
      if (methods[i].label == methods[j].label) throw UsageError("benchmark: duplicate method label " + methods[i].label);
    }
  }
  const auto lasso_it = std::find_if(methods.begin(), methods.end(), [](const MethodSpec& m) {
    return m.engine == Engine::lasso;
  });
  const std::size_t lasso_pos = static_cast<std::size_t>(lasso_it - methods.begin());

  BenchmarkResult out;
  std::vector<std::vector<double>> rmes(methods.size());
  std::vector<std::size_t> fail_count(methods.size(), 0);
  for (std::size_t r = 0; r < spec.replicates; ++r) {
    const RegressionDataset data = gen_case(spec, r);
    const double snr_r = snr(data);
    const auto sparsity = static_cast<std::size_t>((data.true_beta->array() != 0.0).count());
    std::vector<std::optional<double>> me(methods.size());
    std::vector<bool> conv(methods.size(), true);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        bool ok = true;
        const VectorXd beta = fit_method(methods[m], data, opt, spec.seed, r, &ok);
        const double e = model_error(beta, data);
        if (!std::isfinite(e)) throw NumericalError("non-finite model error");
        me[m] = e;
        conv[m] = ok;
      } catch (const std::exception& e) {
        out.failures.push_back({r, methods[m].label, e.what()});
      }
    }
    const bool lasso_ok = me[lasso_pos].has_value() && *me[lasso_pos] > 0.0;
    if (me[lasso_pos] && !lasso_ok) out.failures.push_back({r, methods[lasso_pos].label, "zero lasso model error"});
    for (std::size_t m = 0; m < methods.size(); ++m) {
      if (!me[m] || !lasso_ok) {
        ++fail_count[m];
        continue;
      }
      MetricsRecord rec;
      rec.replicate = r;
      rec.method = methods[m].label;
      rec.model_error = *me[m];
      rec.rme = *me[m] / *me[lasso_pos];
      rec.snr = snr_r;
      rec.sparsity_count = sparsity;
      rec.converged = conv[m];
      rmes[m].push_back(rec.rme);
      out.records.push_back(std::move(rec));
    }
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    s.method = methods[m].label;
    s.records = rmes[m].size();
    s.failures = fail_count[m];
    s.median_rme = detail::median(rmes[m]);
    if (!rmes[m].empty() && opt.bootstrap > 0) {
      Rng rng = derive_stream(spec.seed, detail::label_hash(s.method), detail::kTagBootstrap);
      std::uniform_int_distribution<std::size_t> pick(0, rmes[m].size() - 1);
      std::vector<double> resample(rmes[m].size());
      s.bootstrap.reserve(opt.bootstrap);
      for (std::size_t b = 0; b < opt.bootstrap; ++b) {
        for (auto& v : resample) v = rmes[m][pick(rng)];
        s.bootstrap.push_back(detail::median(resample));
      }
      std::sort(s.bootstrap.begin(), s.bootstrap.end());
      s.boot_q025 = detail::quantile_sorted(s.bootstrap, 0.025);
      s.boot_q500 = detail::quantile_sorted(s.bootstrap, 0.5);
      s.boot_q975 = detail::quantile_sorted(s.bootstrap, 0.975);
    } else {
      s.boot_q025 = s.boot_q500 = s.boot_q975 = s.median_rme;
    }
    out.summaries.push_back(std::move(s));
  }
  return out;
}

}  // namespace tpbn
