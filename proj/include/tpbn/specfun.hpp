#pragma once

// Scalar special functions: log-gamma, modified Bessel K of real order,
// Gauss hypergeometric 2F1 on the positive-parameter region, the upper
// incomplete gamma function including the s = 0 (exponential integral) case,
// and the error function with its scaled complement.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tpbn/errors.hpp"

namespace tpbn {

/// A special-function value that may be carried on the log scale.
struct SpecialValue {
  double value = 0.0;
  bool log_scale = false;

  [[nodiscard]] double linear() const { return log_scale ? std::exp(value) : value; }
  [[nodiscard]] double log() const { return log_scale ? value : std::log(value); }
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kEulerGamma = 0.57721566490153286061;

// Taylor coefficients of 1/Gamma(x) = sum_{k>=1} c_k x^k.
inline constexpr std::array<double, 30> kRecipGammaCoeffs = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
    -2.2987456844353702066e-19,
    1.7144063219273374334e-20,
};

// 1/Gamma(1+x) for |x| <= 1/2.
inline double recip_gamma_1p(double x) {
  double acc = 0.0;
  for (auto it = kRecipGammaCoeffs.rbegin(); it != kRecipGammaCoeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// Temme's auxiliary functions gamma1(mu), gamma2(mu) for |mu| <= 1/2.
inline void temme_gammas(double mu, double& gam1, double& gam2) {
  const double m2 = mu * mu;
  double odd = 0.0;   // sum over odd k of c_k mu^(k-1)
  double even = 0.0;  // sum over even k of c_k mu^(k-2)
  for (int k = static_cast<int>(kRecipGammaCoeffs.size()); k >= 1; --k) {
    const double c = kRecipGammaCoeffs[k - 1];
    if (k % 2 == 1) {
      odd = odd * m2 + c;
    } else {
      even = even * m2 + c;
    }
  }
  gam1 = -even;
  gam2 = odd;
}

/// Returns ln K_mu(x) and K_{mu+1}(x)/K_mu(x) for |mu| <= 1/2, x > 0.
inline void bessel_k_base(double mu, double x, double& log_k, double& ratio) {
  constexpr int kMaxIter = 100000;
  const double mu2 = mu * mu;
  if (x < 2.0) {
    // Temme's series.
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double gam1 = 0.0;
    double gam2 = 0.0;
    temme_gammas(mu, gam1, gam2);
    const double gampl = recip_gamma_1p(mu);
    const double gammi = recip_gamma_1p(-mu);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu2);
      c *= d / di;
      p /= (di - mu);
      q /= (di + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxIter) throw NumericalError("bessel_k: series failed to converge");
    log_k = std::log(sum);
    ratio = sum1 * (2.0 / x) / sum;
  } else {
    // Steed's continued fraction (Thompson-Barnett form), exp-scaled.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= kMaxIter; ++i) {
      a -= 2.0 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxIter) throw NumericalError("bessel_k: continued fraction failed to converge");
    h = a1 * h;
    log_k = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
    ratio = (mu + x + 0.5 - h) / x;
  }
}

inline double log_bessel_k(double order, double z) {
  const double nu = std::abs(order);
  const double nl = std::floor(nu + 0.5);
  const double mu = nu - nl;
  double log_k = 0.0;
  double ratio = 0.0;
  bessel_k_base(mu, z, log_k, ratio);
  // Forward recurrence on the ratio r_k = K_{mu+k+1}/K_{mu+k}, stable for K.
  const auto steps = static_cast<long>(nl);
  for (long k = 1; k <= steps; ++k) {
    log_k += std::log(ratio);
    ratio = 2.0 * (mu + static_cast<double>(k)) / z + 1.0 / ratio;
  }
  return log_k;
}

template <class F>
double tanh_sinh_integrate(F&& f, double lo, double hi, double tol = 1e-13) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  auto guarded = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrator.integrate(guarded, lo, hi, tol);
}

inline double hyp2f1_series(double a, double b, double c, double w) {
  constexpr int kMaxTerms = 2000000;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxTerms; ++n) {
    const double dn = n;
    term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * w;
    sum += term;
    if (term == 0.0) return sum;
    const bool shrinking = std::abs((a + dn + 1.0) * (b + dn + 1.0) / ((c + dn + 1.0) * (dn + 2.0)) * w) < 1.0;
    if (shrinking && std::abs(term) <= kEps * 0.5 * std::abs(sum)) return sum;
  }
  throw NumericalError("gauss_2f1: series failed to converge");
}

// int_0^L x^(k-1) g(x) dx. For k < 1 the substitution x = v^(1/k) removes the
// endpoint singularity, which tanh-sinh cannot resolve once the abscissae
// lose relative precision next to 0.
template <class G>
double power_weighted_integral(double k, double upper, G&& g) {
  if (k >= 1.0) {
    return tanh_sinh_integrate([&](double x) { return std::pow(x, k - 1.0) * g(x); }, 0.0, upper, 1e-15);
  }
  const double inv = 1.0 / k;
  return inv * tanh_sinh_integrate([&](double v) { return g(std::pow(v, inv)); }, 0.0, std::pow(upper, k), 1e-15);
}

// Euler integral representation for w in (0,1) near 1; requires c > b > 0.
// With s = 1 - t the kernel (eps + w s)^(-a) has a feature of width
// eps = 1 - w at s = 0. Pieces: s in [0, eps] rescaled, s in [eps, 1/2] in
// log s, and t in [0, 1/2] near the t^(b-1) endpoint.
inline double hyp2f1_euler(double a, double b, double c, double w) {
  const double eps = 1.0 - w;
  const double cb = c - b;
  const double head = power_weighted_integral(
      cb, 1.0, [&](double u) { return std::pow(1.0 - eps * u, b - 1.0) * std::pow(1.0 + w * u, -a); });
  const double log_head_scale = (cb - a) * std::log(eps);
  const double mid = detail::tanh_sinh_integrate(
      [&](double y) {
        const double s = std::exp(y);
        return std::exp(y * cb) * std::pow(-std::expm1(y), b - 1.0) * std::pow(eps + w * s, -a);
      },
      std::log(eps), -std::numbers::ln2, 1e-15);
  const double near = power_weighted_integral(
      b, 0.5, [&](double t) { return std::pow(1.0 - t, cb - 1.0) * std::pow(eps + w * (1.0 - t), -a); });
  const double log_norm = std::lgamma(c) - std::lgamma(b) - std::lgamma(cb);
  return std::exp(log_norm) * (std::exp(log_head_scale) * head + mid + near);
}

// 2F1(a, b; c; w) for w in [0, 1).
inline double hyp2f1_unit(double a, double b, double c, double w) {
  if (w <= 0.9) return hyp2f1_series(a, b, c, w);
  if (c > b && b > 0.0) return hyp2f1_euler(a, b, c, w);
  if (c > a && a > 0.0) return hyp2f1_euler(b, a, c, w);
  return hyp2f1_series(a, b, c, w);
}

// e^z * E1(z) for z > 0.
inline double exp_e1_scaled(double z) {
  if (z <= 1.0) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -z / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < kEps * std::abs(sum)) break;
    }
    return std::exp(z) * (-kEulerGamma - std::log(z) - sum);
  }
  // Modified Lentz evaluation of the continued fraction.
  constexpr double kTiny = 1e-300;
  double b = z + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("exp_e1_scaled: continued fraction failed to converge");
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  detail::require_domain(std::isfinite(x) && x > 0.0, "log_gamma: argument must be positive and finite");
  return std::lgamma(x);
}

/// Modified Bessel function of the second kind K_order(z), z > 0.
///
/// Temme's series is used for z < 2 and Steed's continued fraction above,
/// both at reduced order |mu| <= 1/2, followed by forward recurrence carried
/// on the ratio K_{mu+k+1}/K_{mu+k}. Everything runs on the log scale, so the
/// log-scaled variant stays finite where K itself under- or overflows.
inline SpecialValue bessel_k(double order, double z, bool log_scale = false) {
  detail::require_domain(std::isfinite(order), "bessel_k: order must be finite");
  detail::require_domain(std::isfinite(z) && z > 0.0, "bessel_k: argument must be positive");
  const double lk = detail::log_bessel_k(order, z);
  if (log_scale) return {lk, true};
  return {std::exp(lk), false};
}

inline double log_bessel_k(double order, double z) { return bessel_k(order, z, true).value; }

/// Gauss hypergeometric function 2F1(p, q; r; z) for z < 1 on the region
/// with positive parameters. Negative z goes through the Pfaff transformation.
inline double gauss_2f1(double p, double q, double r, double z) {
  detail::require_domain(std::isfinite(p) && std::isfinite(q) && std::isfinite(r) && std::isfinite(z),
                         "gauss_2f1: non-finite argument");
  detail::require_domain(z < 1.0, "gauss_2f1: requires z < 1");
  detail::require_domain(!(r <= 0.0 && r == std::floor(r)), "gauss_2f1: r must not be a non-positive integer");
  if (z == 0.0) return 1.0;
  if (z > 0.0) return detail::hyp2f1_unit(p, q, r, z);
  // 2F1(p,q;r;z) = (1-z)^(-p) 2F1(p, r-q; r; z/(z-1)), or the (p <-> q) form.
  const double w = z / (z - 1.0);
  if (r - q >= 0.0 || r - p < 0.0) {
    return std::exp(-p * std::log1p(-z)) * detail::hyp2f1_unit(p, r - q, r, w);
  }
  return std::exp(-q * std::log1p(-z)) * detail::hyp2f1_unit(r - p, q, r, w);
}

/// Upper incomplete gamma Gamma(s, z) for s >= 0; s = 0 is the exponential integral E1.
inline double upper_inc_gamma(double s, double z) {
  detail::require_domain(std::isfinite(s) && s >= 0.0, "upper_inc_gamma: s must be non-negative");
  detail::require_domain(std::isfinite(z) && z >= 0.0, "upper_inc_gamma: z must be non-negative");
  if (s == 0.0) {
    detail::require_domain(z > 0.0, "upper_inc_gamma: Gamma(0, 0) diverges");
    return std::exp(-z) * detail::exp_e1_scaled(z);
  }
  if (z == 0.0) return std::tgamma(s);
  return boost::math::tgamma(s, z);
}

/// e^z Gamma(0, z), finite for large z where both factors are not.
inline double exp_times_gamma0(double z) {
  detail::require_domain(std::isfinite(z) && z > 0.0, "exp_times_gamma0: z must be positive");
  return detail::exp_e1_scaled(z);
}

inline double erf(double x) {
  detail::require_domain(std::isfinite(x), "erf: non-finite argument");
  return std::erf(x);
}

/// Scaled complementary error function e^{x^2} erfc(x), x >= 0.
inline double erfcx(double x) {
  detail::require_domain(std::isfinite(x) && x >= 0.0, "erfcx: requires finite x >= 0");
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction: sqrt(pi) erfcx(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
  constexpr double kTiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 10000; ++k) {
    const double an = 0.5 * k;
    d = x + an * d;
    if (d == 0.0) d = kTiny;
    c = x + an / c;
    if (c == 0.0) c = kTiny;
    d = 1.0 / d;
    const double del = c * d;
    f *= del;
    if (std::abs(del - 1.0) < detail::kEps) break;
  }
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

}  // namespace tpbn
