#pragma once

// Scalar special functions backing the distribution code: regularized
// incomplete gamma (lower/upper and inverse) and the standard normal
// cdf/quantile. Self-contained, double precision.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace eot {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrtTwoPi = 2.506628274631000502415765284811045253;

inline double ln_gamma(double x) { return std::lgamma(x); }

namespace detail {

inline constexpr int kGammaMaxIter = 2000;
inline constexpr double kGammaEps = 3.0e-16;

// Lower regularized incomplete gamma by power series; valid for x < a + 1.
inline double gamma_p_series(double a, double x, double gln) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - gln);
}

// Upper regularized incomplete gamma by Lentz continued fraction; x >= a + 1.
inline double gamma_q_contfrac(double a, double x, double gln) {
  const double fpmin = std::numeric_limits<double>::min() / kGammaEps;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kGammaEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - gln);
}

}  // namespace detail

// P(a, x): regularized lower incomplete gamma. gln = ln_gamma(a) may be
// precomputed by hot callers.
inline double reg_gamma_p(double a, double x, double gln) {
  if (!(a > 0.0) || std::isnan(x)) throw std::domain_error("reg_gamma_p: bad arguments");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? detail::gamma_p_series(a, x, gln)
                     : 1.0 - detail::gamma_q_contfrac(a, x, gln);
}

inline double reg_gamma_p(double a, double x) { return reg_gamma_p(a, x, ln_gamma(a)); }

inline double reg_gamma_q(double a, double x, double gln) {
  if (!(a > 0.0) || std::isnan(x)) throw std::domain_error("reg_gamma_q: bad arguments");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x, gln)
                     : detail::gamma_q_contfrac(a, x, gln);
}

inline double reg_gamma_q(double a, double x) { return reg_gamma_q(a, x, ln_gamma(a)); }

// Phi(x), accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ln Phi(x); switches to the asymptotic expansion deep in the left tail
// where erfc underflows in log space.
inline double log_normal_cdf(double x) {
  if (x > -34.0) return std::log(normal_cdf(x));
  const double t2 = x * x;
  // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
  const double corr = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2) +
                      105.0 / (t2 * t2 * t2 * t2);
  return -0.5 * t2 - 0.5 * std::log(2.0 * kPi) - std::log(-x) + std::log(corr);
}

// Inverse standard normal cdf: Acklam's rational approximation polished by
// two Halley steps against the erfc-based cdf.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = normal_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) / kSqrtTwoPi;
    if (pdf <= 0.0) break;
    const double u = e / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// Solves P(a, x) = p for x. Halley iteration seeded by a Wilson-Hilferty
// guess (a > 1) or the small-a startup from Numerical Recipes 6.2.
inline double reg_gamma_p_inv(double a, double p, double gln) {
  if (!(a > 0.0)) throw std::domain_error("reg_gamma_p_inv: a must be positive");
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double a1 = a - 1.0;
  double x;
  if (a > 1.0) {
    const double z = normal_quantile(p);
    const double t = 1.0 - 1.0 / (9.0 * a) + z * std::sqrt(1.0 / (9.0 * a));
    x = t > 0.0 ? a * t * t * t : 1e-3 * a;
  } else {
    const double t = 1.0 - a * (0.253 + a * 0.12);
    x = p < t ? std::pow(p / t, 1.0 / a) : 1.0 - std::log1p(-(p - t) / (1.0 - t));
  }
  for (int it = 0; it < 24; ++it) {
    if (x <= 0.0) {
      x = std::numeric_limits<double>::min();
      break;
    }
    const double err = reg_gamma_p(a, x, gln) - p;
    const double dpdx = std::exp(-x + a1 * std::log(x) - gln);
    if (!(dpdx > 0.0) || !std::isfinite(dpdx)) break;
    const double u = err / dpdx;
    const double dx = u / (1.0 - 0.5 * std::fmin(1.0, u * (a1 / x - 1.0)));
    const double xn = x - dx;
    x = xn > 0.0 ? xn : 0.5 * x;
    if (std::fabs(dx) < 1e-13 * (x + 1e-300)) break;
  }
  return x;
}

inline double reg_gamma_p_inv(double a, double p) { return reg_gamma_p_inv(a, p, ln_gamma(a)); }

}  // namespace eot
