#pragma once

// Severity distribution families: density, distribution function, quantile
// and sampling for Gamma, log-normal, Weibull, log-Gamma and Pareto type II,
// plus right-truncated variants used for the bulk of a composite model.
//
// Parameterizations:
//   Gamma(shape, scale)        mean = shape*scale
//   LogNormal(mu, sigma)       ln Z ~ N(mu, sigma^2)
//   Weibull(shape, scale)      F(z) = 1 - exp(-(z/scale)^shape)
//   LogGamma(shape, rate)      Z = exp(X), X ~ Gamma(shape, rate); support z > 1
//   ParetoII(alpha, beta)      f(y) = (alpha/beta)(1 + y/beta)^-(alpha+1), y > 0
//
// The Pareto type II family models the excess over a threshold, so its
// argument is the excess y = z - b, never z itself.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "eot/rng.hpp"
#include "eot/special_functions.hpp"

namespace eot {

enum class Family { Gamma, LogNormal, Weibull, LogGamma, ParetoII };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Gamma: return "gamma";
    case Family::LogNormal: return "lognormal";
    case Family::Weibull: return "weibull";
    case Family::LogGamma: return "loggamma";
    case Family::ParetoII: return "paretoii";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "gamma") return Family::Gamma;
  if (s == "lognormal") return Family::LogNormal;
  if (s == "weibull") return Family::Weibull;
  if (s == "loggamma") return Family::LogGamma;
  if (s == "paretoii") return Family::ParetoII;
  throw std::invalid_argument("unknown distribution family: " + s);
}

struct DistributionSpec {
  Family family;
  double param1;  // shape (mu for LogNormal)
  double param2;  // scale (sigma for LogNormal, rate for LogGamma)
};

inline void validate_spec(const DistributionSpec& spec) {
  if (!std::isfinite(spec.param1) || !std::isfinite(spec.param2))
    throw std::domain_error("distribution parameters must be finite");
  if (!(spec.param2 > 0.0)) throw std::domain_error("param2 must be positive");
  if (spec.family != Family::LogNormal && !(spec.param1 > 0.0))
    throw std::domain_error("param1 must be positive");
}

// Infimum of the support; densities are zero at or below it.
inline double support_min(const DistributionSpec& spec) {
  return spec.family == Family::LogGamma ? 1.0 : 0.0;
}

namespace detail {

inline void check_arg(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("argument must be positive and finite");
}

}  // namespace detail

inline double pdf(const DistributionSpec& spec, double z) {
  detail::check_arg(z);
  const double a = spec.param1, s = spec.param2;
  switch (spec.family) {
    case Family::Gamma:
      return std::exp((a - 1.0) * std::log(z / s) - z / s - ln_gamma(a)) / s;
    case Family::LogNormal: {
      const double t = (std::log(z) - a) / s;
      return std::exp(-0.5 * t * t) / (z * s * kSqrtTwoPi);
    }
    case Family::Weibull: {
      const double t = z / s;
      return (a / s) * std::pow(t, a - 1.0) * std::exp(-std::pow(t, a));
    }
    case Family::LogGamma: {
      if (z <= 1.0) return 0.0;
      const double lz = std::log(z);
      // density of exp(X), X ~ Gamma(a, rate s)
      return std::exp(a * std::log(s) + (a - 1.0) * std::log(lz) - (s + 1.0) * lz - ln_gamma(a));
    }
    case Family::ParetoII:
      return (a / s) * std::pow(1.0 + z / s, -(a + 1.0));
  }
  return 0.0;
}

inline double cdf(const DistributionSpec& spec, double z) {
  detail::check_arg(z);
  const double a = spec.param1, s = spec.param2;
  switch (spec.family) {
    case Family::Gamma:
      return reg_gamma_p(a, z / s);
    case Family::LogNormal:
      return normal_cdf((std::log(z) - a) / s);
    case Family::Weibull:
      return -std::expm1(-std::pow(z / s, a));
    case Family::LogGamma:
      return z <= 1.0 ? 0.0 : reg_gamma_p(a, s * std::log(z));
    case Family::ParetoII:
      return -std::expm1(-a * std::log1p(z / s));
  }
  return 0.0;
}

// Closed form where available (Weibull, LogNormal, ParetoII); incomplete
// gamma inversion for Gamma and LogGamma.
inline double quantile(const DistributionSpec& spec, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p outside (0,1)");
  const double a = spec.param1, s = spec.param2;
  switch (spec.family) {
    case Family::Gamma:
      return s * reg_gamma_p_inv(a, p);
    case Family::LogNormal:
      return std::exp(a + s * normal_quantile(p));
    case Family::Weibull:
      return s * std::pow(-std::log1p(-p), 1.0 / a);
    case Family::LogGamma:
      return std::exp(reg_gamma_p_inv(a, p) / s);
    case Family::ParetoII:
      return s * std::expm1(-std::log1p(-p) / a);
  }
  return 0.0;
}

namespace detail {

// Marsaglia-Tsang squeeze; normal variate by inversion so draws stay a pure
// function of the generator state.
inline double gamma_variate(Philox& rng, double shape) {
  if (shape < 1.0) {
    const double u = rng.uniform();
    return gamma_variate(rng, shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      double u = rng.uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      if (u >= 1.0) u = 1.0 - 0x1.0p-53;
      x = normal_quantile(u);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u2 = rng.uniform();
    if (u2 < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u2 > 0.0 && std::log(u2) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

inline double sample_one(const DistributionSpec& spec, Philox& rng) {
  const double a = spec.param1, s = spec.param2;
  switch (spec.family) {
    case Family::Gamma:
      return s * detail::gamma_variate(rng, a);
    case Family::LogGamma:
      return std::exp(detail::gamma_variate(rng, a) / s);
    case Family::LogNormal:
    case Family::Weibull: {
      double u = rng.uniform();
      if (u <= 0.0) u = 0x1.0p-54;
      return quantile(spec, u);
    }
    case Family::ParetoII: {
      // inversion: y = beta ((1-U)^(-1/alpha) - 1)
      const double u = rng.uniform();
      return s * std::expm1(-std::log1p(-u) / a);
    }
  }
  return 0.0;
}

inline std::vector<double> sample(const DistributionSpec& spec, Philox& rng, std::size_t count) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  validate_spec(spec);
  std::vector<double> out(count);
  for (auto& z : out) z = sample_one(spec, rng);
  return out;
}

struct TruncatedSpec {
  DistributionSpec base;
  double upper;
};

// Inversion sampler for the right-truncated base distribution. Caches the
// truncation mass; for the gamma-kernel families, which have no closed-form
// quantile, a cubic Hermite grid over the truncated range supplies starting
// points that two Halley corrections push to the 1e-10 solver contract.
class TruncatedSampler {
 public:
  TruncatedSampler(const DistributionSpec& base, double upper)
      : base_(base), upper_(upper), gln_(0.0) {
    validate_spec(base);
    if (!(upper > support_min(base)) || !std::isfinite(upper))
      throw std::domain_error("truncation point outside support");
    mass_ = cdf(base, upper);
    if (!(mass_ > 0.0)) throw std::domain_error("degenerate truncation: cdf(base, upper) = 0");
    if (base.family == Family::Gamma || base.family == Family::LogGamma) {
      gln_ = ln_gamma(base.param1);
      build_grid();
    }
  }

  double mass() const { return mass_; }
  double upper() const { return upper_; }
  const DistributionSpec& base() const { return base_; }

  // quantile(base, u * F(upper)); u = 1 maps to the truncation point.
  double inverse(double u) const {
    const double p = u * mass_;
    if (p <= 0.0) return support_min(base_);
    const double a = base_.param1, s = base_.param2;
    switch (base_.family) {
      case Family::Gamma:
        return s * gamma_kernel_inverse(a, u, p);
      case Family::LogGamma:
        return std::exp(gamma_kernel_inverse(a, u, p) / s);
      default:
        return quantile(base_, p);
    }
  }

  double draw(Philox& rng) const { return inverse(rng.uniform()); }

 private:
  static constexpr int kCells = 1024;

  void build_grid() {
    const double a = base_.param1;
    const double a1 = a - 1.0;
    grid_x_.resize(kCells + 1);
    grid_d_.resize(kCells + 1);
    for (int k = 1; k <= kCells; ++k) {
      const double p = mass_ * static_cast<double>(k) / kCells;
      const double x = reg_gamma_p_inv(a, p, gln_);
      const double d = std::exp(x - a1 * std::log(x) + gln_);
      if (!std::isfinite(x) || !std::isfinite(d)) {
        // extreme shapes: fall back to direct inversion per draw
        grid_x_.clear();
        grid_d_.clear();
        return;
      }
      grid_x_[static_cast<std::size_t>(k)] = x;
      grid_d_[static_cast<std::size_t>(k)] = d;  // dx/dp = 1 / P'(x)
    }
    // the interpolant is only trusted where the endpoint slopes stay close
    // to the secant; near p -> 1 the quantile steepens beyond what a cubic
    // can track and those cells take the direct path
    const double dp = mass_ / kCells;
    grid_fast_.assign(kCells, 0);
    for (int k = 1; k < kCells; ++k) {
      const double gap = grid_x_[static_cast<std::size_t>(k + 1)] - grid_x_[static_cast<std::size_t>(k)];
      const double d0 = grid_d_[static_cast<std::size_t>(k)] * dp;
      const double d1 = grid_d_[static_cast<std::size_t>(k + 1)] * dp;
      grid_fast_[static_cast<std::size_t>(k)] = (d0 <= 4.0 * gap && d1 <= 4.0 * gap) ? 1 : 0;
    }
  }

  // inverse of the regularized incomplete gamma inside the truncated range
  double gamma_kernel_inverse(double a, double u, double p) const {
    if (grid_x_.empty()) return reg_gamma_p_inv(a, p, gln_);
    const double t = u * kCells;
    const int cell = std::min(static_cast<int>(t), kCells - 1);
    if (cell < 1 || grid_fast_[static_cast<std::size_t>(cell)] == 0)
      return reg_gamma_p_inv(a, p, gln_);  // steep cells take the direct path

    const double dp = mass_ / kCells;
    const double s = t - cell;
    const double x0 = grid_x_[static_cast<std::size_t>(cell)];
    const double x1 = grid_x_[static_cast<std::size_t>(cell + 1)];
    const double d0 = grid_d_[static_cast<std::size_t>(cell)] * dp;
    const double d1 = grid_d_[static_cast<std::size_t>(cell + 1)] * dp;
    const double s2 = s * s;
    const double s3 = s2 * s;
    double x = (2.0 * s3 - 3.0 * s2 + 1.0) * x0 + (s3 - 2.0 * s2 + s) * d0 +
               (-2.0 * s3 + 3.0 * s2) * x1 + (s3 - s2) * d1;

    const double a1 = a - 1.0;
    for (int it = 0; it < 2; ++it) {
      const double err = reg_gamma_p(a, x, gln_) - p;
      const double dpdx = std::exp(-x + a1 * std::log(x) - gln_);
      const double v = err / dpdx;
      x -= v / (1.0 - 0.5 * std::fmin(1.0, v * (a1 / x - 1.0)));
      if (!(x > 0.0) || !std::isfinite(x)) return reg_gamma_p_inv(a, p, gln_);
    }
    return x;
  }

  DistributionSpec base_;
  double upper_;
  double mass_;
  double gln_;
  std::vector<double> grid_x_;
  std::vector<double> grid_d_;
  std::vector<char> grid_fast_;
};

inline double truncated_sample(const TruncatedSpec& trunc, Philox& rng) {
  return TruncatedSampler(trunc.base, trunc.upper).draw(rng);
}

// Pareto type II pieces on the excess scale, kept as free helpers because the
// tail of every composite model uses them directly.
inline double pareto_pdf(double alpha, double beta, double y) {
  return (alpha / beta) * std::pow(1.0 + y / beta, -(alpha + 1.0));
}

inline double pareto_cdf(double alpha, double beta, double y) {
  return -std::expm1(-alpha * std::log1p(y / beta));
}

inline double pareto_quantile(double alpha, double beta, double p) {
  return beta * std::expm1(-std::log1p(-p) / alpha);
}

inline double pareto_draw(double alpha, double beta, Philox& rng) {
  return pareto_quantile(alpha, beta, rng.uniform());
}

}  // namespace eot
