#pragma once

// Three-parameter beta (TPB) distribution on (0,1),
//   f(x; a, b, phi) = Gamma(a+b)/(Gamma(a)Gamma(b)) phi^b x^(b-1) (1-x)^(a-1) {1 + (phi-1) x}^(-(a+b)),
// its normal scale mixture (TPBN) and the equivalent gamma/inverted-beta
// hierarchies for the prior variance tau = 1/rho - 1.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "tpbn/errors.hpp"
#include "tpbn/random.hpp"
#include "tpbn/specfun.hpp"

namespace tpbn {

/// Prior triple (a, b, phi). An empty phi means phi is unknown and gets the
/// half-Cauchy hyperprior phi^(1/2) ~ C+(0, 1).
struct TpbParams {
  double a = 0.5;
  double b = 0.5;
  std::optional<double> phi = 1.0;

  static TpbParams fixed(double a, double b, double phi) { return {a, b, phi}; }
  static TpbParams half_cauchy(double a, double b) { return {a, b, std::nullopt}; }

  [[nodiscard]] bool phi_unknown() const { return !phi.has_value(); }

  [[nodiscard]] double fixed_phi() const {
    if (!phi) throw UsageError("TPB: phi is unknown (half-Cauchy); a fixed value is required here");
    return *phi;
  }

  void validate() const {
    if (!(std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0)) {
      std::ostringstream msg;
      msg << "TPB shapes must be positive (a=" << a << ", b=" << b << ")";
      throw DomainError(msg.str());
    }
    if (phi && !(std::isfinite(*phi) && *phi > 0.0)) throw DomainError("TPB: phi must be positive");
  }
};

/// rho = 1/(1 + tau): rho near 1 pulls the coefficient to zero.
struct ShrinkageCoefficient {
  double rho = 0.5;

  static ShrinkageCoefficient from_variance(double tau) {
    detail::require_domain(tau > 0.0, "shrinkage coefficient: tau must be positive");
    return {1.0 / (1.0 + tau)};
  }
  [[nodiscard]] double variance() const { return 1.0 / rho - 1.0; }
};

namespace detail {

inline double log_beta_fn(double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); }

// int_0^t s^(alpha-1) (1-s)^(beta-1) ds / B(alpha, beta), via s = t u.
inline double beta_lower_mass(double alpha, double beta, double t) {
  if (t <= 0.0) return 0.0;
  const double integral = tanh_sinh_integrate(
      [&](double u) { return std::pow(u, alpha - 1.0) * std::pow(1.0 - t * u, beta - 1.0); }, 0.0, 1.0, 1e-14);
  return std::exp(alpha * std::log(t) - log_beta_fn(alpha, beta)) * integral;
}

}  // namespace detail

inline double tpb_log_pdf(double x, const TpbParams& params) {
  params.validate();
  const double phi = params.fixed_phi();
  detail::require_domain(x > 0.0 && x < 1.0, "tpb_pdf: x must lie in (0,1)");
  const double a = params.a;
  const double b = params.b;
  return -detail::log_beta_fn(a, b) + b * std::log(phi) + (b - 1.0) * std::log(x) + (a - 1.0) * std::log1p(-x) -
         (a + b) * std::log((1.0 - x) + phi * x);
}

inline double tpb_pdf(double x, const TpbParams& params) { return std::exp(tpb_log_pdf(x, params)); }

/// Gauss hypergeometric density with normalizer B(b,a) 2F1(r, b; a+b; -zeta).
inline double gh_pdf(double x, double a, double b, double r, double zeta) {
  detail::require_domain(x > 0.0 && x < 1.0, "gh_pdf: x must lie in (0,1)");
  detail::require_domain(a > 0.0 && b > 0.0, "gh_pdf: shapes must be positive");
  detail::require_domain(zeta > -1.0 && std::isfinite(r), "gh_pdf: requires 1 + zeta x > 0 on (0,1)");
  const double norm = gauss_2f1(r, b, a + b, -zeta);
  detail::require_domain(std::isfinite(norm) && norm > 0.0, "gh_pdf: invalid normalizer");
  const double log_kernel = (b - 1.0) * std::log(x) + (a - 1.0) * std::log1p(-x) - r * std::log1p(zeta * x);
  return std::exp(log_kernel - detail::log_beta_fn(b, a) - std::log(norm));
}

/// P(rho <= x). The integral is taken after mapping rho to
/// v = (1-rho)/((1-rho) + phi rho), which carries TPB(a,b,phi) onto the
/// beta kernel v^(a-1)(1-v)^(b-1) for every phi; the shorter tail is integrated.
inline double tpb_cdf(double x, const TpbParams& params) {
  params.validate();
  const double phi = params.fixed_phi();
  detail::require_domain(x >= 0.0 && x <= 1.0, "tpb_cdf: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double denom = (1.0 - x) + phi * x;
  const double v0 = (1.0 - x) / denom;
  const double w0 = phi * x / denom;  // 1 - v0
  double cdf = 0.0;
  if (w0 <= 0.5) {
    cdf = detail::beta_lower_mass(params.b, params.a, w0);
  } else {
    cdf = 1.0 - detail::beta_lower_mass(params.a, params.b, v0);
  }
  return std::clamp(cdf, 0.0, 1.0);
}

/// E[X^k] for X ~ TPB(a, b, phi). The phi^b factor makes k = 0 give 1; the
/// hypergeometric term alone equals phi^(-b) there.
inline double tpb_moment(int k, const TpbParams& params) {
  params.validate();
  const double phi = params.fixed_phi();
  detail::require_domain(k >= 1, "tpb_moment: k must be a positive integer");
  const double a = params.a;
  const double b = params.b;
  const double dk = k;
  const double log_front = std::lgamma(a + b) + std::lgamma(b + dk) - std::lgamma(b) - std::lgamma(a + b + dk);
  return std::exp(log_front + b * std::log(phi)) * gauss_2f1(a + b, b + dk, a + b + dk, 1.0 - phi);
}

/// phi such that P(rho > threshold) = target_prob under TPB(a, b, phi).
/// Bisection on log(phi) over [1e-12, 1e12].
inline double calibrate_phi(double a, double b, double threshold, double target_prob, double rel_tol = 1e-8) {
  TpbParams probe{a, b, 1.0};
  probe.validate();
  detail::require_domain(threshold > 0.0 && threshold < 1.0, "calibrate_phi: threshold must lie in (0,1)");
  detail::require_domain(target_prob > 0.0 && target_prob < 1.0, "calibrate_phi: target probability must lie in (0,1)");
  auto excess = [&](double log_phi) {
    probe.phi = std::exp(log_phi);
    return (1.0 - tpb_cdf(threshold, probe)) - target_prob;
  };
  double lo = std::log(1e-12);
  double hi = std::log(1e12);
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo >= 0.0 && f_hi <= 0.0)) {
    std::ostringstream msg;
    msg << "calibrate_phi: root not bracketed in phi in [1e-12, 1e12] (a=" << a << ", b=" << b
        << ", threshold=" << threshold << ", target=" << target_prob << ")";
    throw CalibrationError(msg.str());
  }
  while (hi - lo > rel_tol) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

/// rho draws via tau/phi ~ inverted beta(a, b) as a ratio of gamma variates.
inline std::vector<double> sample_tpb(const TpbParams& params, std::size_t n, Rng& rng) {
  params.validate();
  const double phi = params.fixed_phi();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ga = rand::gamma(rng, params.a, 1.0);
    const double gb = rand::gamma(rng, params.b, 1.0);
    // rho = 1/(1 + phi ga/gb)
    double rho = gb / (gb + phi * ga);
    if (!(rho > 0.0)) rho = std::numeric_limits<double>::min();
    if (!(rho < 1.0)) rho = std::nextafter(1.0, 0.0);
    out.push_back(rho);
  }
  return out;
}

/// rho draws straight from the TPB density: Beta(b, a) proposals accepted with
/// probability proportional to {1 + (phi-1) x}^(-(a+b)). The acceptance rate is
/// about phi^a below phi = 1 and phi^(-b) above, so this suits moderate phi.
inline std::vector<double> sample_tpb_rejection(const TpbParams& params, std::size_t n, Rng& rng) {
  params.validate();
  const double phi = params.fixed_phi();
  const double s = params.a + params.b;
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = rand::beta(rng, params.b, params.a);
    if (!(x > 0.0 && x < 1.0)) continue;
    const double base = (1.0 - x) + phi * x;
    const double accept = phi >= 1.0 ? std::pow(base, -s) : std::pow(phi / base, s);
    if (rand::uniform(rng) < accept) out.push_back(x);
  }
  return out;
}

/// theta via lambda ~ G(b, phi), tau ~ G(a, lambda), theta ~ N(0, tau).
inline std::vector<double> sample_theta_hier1(const TpbParams& params, std::size_t n, Rng& rng) {
  params.validate();
  const double phi = params.fixed_phi();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = rand::gamma(rng, params.b, phi);
    const double tau = rand::gamma(rng, params.a, lambda);
    out.push_back(std::sqrt(tau) * rand::normal(rng));
  }
  return out;
}

/// theta via tau/phi ~ inverted beta(a, b), theta ~ N(0, tau).
inline std::vector<double> sample_theta_hier2(const TpbParams& params, std::size_t n, Rng& rng) {
  params.validate();
  const double phi = params.fixed_phi();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = phi * rand::gamma(rng, params.a, 1.0) / rand::gamma(rng, params.b, 1.0);
    out.push_back(std::sqrt(tau) * rand::normal(rng));
  }
  return out;
}

/// theta | rho ~ N(0, 1/rho - 1) for given shrinkage draws.
inline std::vector<double> theta_from_rho(const std::vector<double>& rho, Rng& rng) {
  std::vector<double> out;
  out.reserve(rho.size());
  for (double r : rho) out.push_back(std::sqrt((1.0 - r) / r) * rand::normal(rng));
  return out;
}

namespace detail {

// Asymptotic sums for the large-argument tails of the closed-form marginals,
// where the printed expressions cancel to ~1/z. Truncated at the smallest
// term, which is below 1e-18 relative once z >= 50.
//   1 - z e^z Gamma(0, z)           ~ sum_{n>=1} (-1)^(n+1) n! / z^n
//   1 - sqrt(pi z) e^z erfc(sqrt z) ~ sum_{n>=1} (-1)^(n+1) (2n-1)!! / (2z)^n
inline double marginal_tail_sum(double z, bool double_factorial) {
  double term = 1.0;
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n < 400; ++n) {
    term *= double_factorial ? (2.0 * n - 1.0) / (2.0 * z) : n / z;
    if (term >= prev) break;
    sum += (n % 2 == 1) ? term : -term;
    prev = term;
  }
  return sum;
}

constexpr double kMarginalAsymptoticZ = 50.0;

}  // namespace detail

/// Marginal prior density of a coefficient under TPBN(a, 1/2, 1) with unit
/// error variance, for a in {1/2, 1, 3/2}. Products of the form
/// e^{z} Gamma(0, z) and e^{x^2} erfc(x) are formed directly so the
/// evaluation stays finite for large |beta|, and the a = 1 and a = 3/2 forms
/// switch to asymptotic sums once the printed expression would cancel. At
/// beta = 0 the a = 1/2 density is unbounded and +infinity is returned.
inline double marginal_beta_pdf(double beta, double a) {
  detail::require_domain(std::isfinite(beta), "marginal_beta_pdf: beta must be finite");
  constexpr double kPi = std::numbers::pi;
  const double z = 0.5 * beta * beta;
  if (a == 0.5) {
    if (z == 0.0) return std::numeric_limits<double>::infinity();
    return exp_times_gamma0(z) / (std::sqrt(2.0) * std::pow(kPi, 1.5));
  }
  if (a == 1.0) {
    // 1/sqrt(2 pi) - |b|/2 e^{b^2/2} + b/2 e^{b^2/2} erf(b/sqrt 2)
    //   = 1/sqrt(2 pi) - |b|/2 e^{b^2/2} erfc(|b|/sqrt 2)
    //   = (1/sqrt(2 pi)) (1 - sqrt(pi z) erfcx(sqrt z))
    if (z >= detail::kMarginalAsymptoticZ) return detail::marginal_tail_sum(z, true) / std::sqrt(2.0 * kPi);
    const double ab = std::abs(beta);
    return 1.0 / std::sqrt(2.0 * kPi) - 0.5 * ab * erfcx(ab / std::numbers::sqrt2);
  }
  if (a == 1.5) {
    const double front = std::numbers::sqrt2 / std::pow(kPi, 1.5);
    if (z >= detail::kMarginalAsymptoticZ) return front * detail::marginal_tail_sum(z, false);
    const double tail = z == 0.0 ? 0.0 : z * exp_times_gamma0(z);
    return front * (1.0 - tail);
  }
  throw DomainError("marginal_beta_pdf: closed forms exist only for a in {1/2, 1, 3/2}");
}

}  // namespace tpbn
