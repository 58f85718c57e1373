#pragma once

// Generalized inverse Gaussian distribution with density proportional to
//   x^(mu-1) exp{-(nu x + xi / x) / 2},   x > 0.
// Sampling follows Hoermann & Leydold (2014): ratio-of-uniforms with or
// without mode shift, plus a dedicated rejection scheme for small
// concentration, all on the standardized form GIG(|mu|, omega, omega).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tpbn/errors.hpp"
#include "tpbn/random.hpp"
#include "tpbn/specfun.hpp"

namespace tpbn {

struct GigParams {
  double mu = 1.0;  ///< index
  double nu = 1.0;  ///< coefficient of x
  double xi = 1.0;  ///< coefficient of 1/x

  void validate() const {
    const bool ok = std::isfinite(mu) && std::isfinite(nu) && std::isfinite(xi) && nu > 0.0 && xi >= 0.0 &&
                    (xi > 0.0 || mu > 0.0);
    if (!ok) {
      std::ostringstream msg;
      msg << "GIG parameters invalid (mu=" << mu << ", nu=" << nu << ", xi=" << xi << ")";
      throw DomainError(msg.str());
    }
  }
};

namespace detail {

inline double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms without mode shift; lambda >= 0.
inline double gig_rou_noshift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rand::uniform(rng);
    const double v = rand::uniform(rng);
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with mode shift; lambda >= 0.
inline double gig_rou_shift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Extremal points of v -> (x - xm) sqrt(f(x)) via a depressed cubic.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = (2.0 * (lambda - 1.0) * xm / omega - 1.0);
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double arg = std::clamp(-q / (2.0 * std::sqrt(-p * p * p / 27.0)), -1.0, 1.0);
  const double fi = std::acos(arg);
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + rand::uniform(rng) * (uplus - uminus);
    const double v = rand::uniform(rng);
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a piecewise envelope; 0 <= lambda < 1, small omega.
inline double gig_small_omega(Rng& rng, double lambda, double omega) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a0 = k0 * x0;
  double k1 = 0.0;
  double a1 = 0.0;
  double k2 = 0.0;
  double a2 = 0.0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = (lambda == 0.0) ? k1 * std::log(2.0 / (omega * omega))
                         : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = a0 + a1 + a2;
  for (;;) {
    double v = total * rand::uniform(rng);
    double x = 0.0;
    double hx = 0.0;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else if ((v -= a0) <= a1) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + (lambda / k1 * v), 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= a1;
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rand::uniform(rng) * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

// One draw from GIG(lambda, omega, omega) with lambda >= 0, omega > 0.
inline double gig_standard(Rng& rng, double lambda, double omega) {
  if (lambda > 2.0 || omega > 3.0) return gig_rou_shift(rng, lambda, omega);
  if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) return gig_rou_noshift(rng, lambda, omega);
  return gig_small_omega(rng, lambda, omega);
}

}  // namespace detail

/// One draw from GIG(mu, nu, xi). At xi = 0 this is Gamma(mu, rate nu/2).
inline double gig_sample(const GigParams& params, Rng& rng) {
  params.validate();
  if (params.xi == 0.0) return rand::gamma(rng, params.mu, 0.5 * params.nu);
  const double omega = std::sqrt(params.nu * params.xi);
  const double alpha = std::sqrt(params.xi / params.nu);
  const double lambda = std::abs(params.mu);
  if (omega == 0.0) {
    // Underflowed concentration: the gamma or inverse-gamma limit.
    if (params.mu > 0.0) return rand::gamma(rng, params.mu, 0.5 * params.nu);
    if (params.mu < 0.0) return 1.0 / rand::gamma(rng, -params.mu, 0.5 * params.xi);
    throw NumericalError("gig_sample: nu * xi underflows with mu = 0");
  }
  double x = detail::gig_standard(rng, lambda, omega);
  // GIG(-l, w, w) is the law of 1/X for X ~ GIG(l, w, w).
  if (params.mu < 0.0) x = 1.0 / x;
  return alpha * x;
}

/// E[X] for X ~ GIG(mu, nu, xi).
inline double gig_mean(const GigParams& params) {
  params.validate();
  if (params.xi == 0.0) return 2.0 * params.mu / params.nu;
  const double omega = std::sqrt(params.nu * params.xi);
  const double log_ratio = log_bessel_k(params.mu + 1.0, omega) - log_bessel_k(params.mu, omega);
  return std::sqrt(params.xi / params.nu) * std::exp(log_ratio);
}

/// E[1/X] for X ~ GIG(mu, nu, xi).
inline double gig_inv_mean(const GigParams& params) {
  params.validate();
  if (params.xi == 0.0) {
    detail::require_domain(params.mu > 1.0, "gig_inv_mean: E[1/X] is infinite for the gamma limit with mu <= 1");
    return params.nu / (2.0 * (params.mu - 1.0));
  }
  const double omega = std::sqrt(params.nu * params.xi);
  const double log_ratio = log_bessel_k(params.mu - 1.0, omega) - log_bessel_k(params.mu, omega);
  return std::sqrt(params.nu / params.xi) * std::exp(log_ratio);
}

}  // namespace tpbn
