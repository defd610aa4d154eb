#pragma once

// Maximum-likelihood estimation: bulk families below a fixed threshold
// (plain or right-truncated likelihood), the Pareto type II tail above it,
// and the simultaneous composite lognormal-Pareto fit in which the
// threshold is itself a parameter and the mixing weight enforces a density
// that is continuous at the threshold.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "eot/distributions.hpp"
#include "eot/errors.hpp"
#include "eot/optimize.hpp"
#include "eot/tailselect.hpp"

namespace eot {

enum class FitMode { TruncatedLikelihood, PlainLikelihood };

inline const char* fit_mode_name(FitMode m) {
  return m == FitMode::TruncatedLikelihood ? "truncated" : "plain";
}

struct BulkFit {
  DistributionSpec spec;
  double b = 0.0;
  FitMode mode = FitMode::TruncatedLikelihood;
  double loglik = 0.0;
  bool converged = false;
};

struct TailFit {
  double alpha = 0.0;
  double beta = 0.0;
  double b = 0.0;
  long n_exceed = 0;
  double loglik = 0.0;
  bool boundary = false;  // profile optimum pinned at the search boundary
};

struct ScollnikFit {
  double mu = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double b = 0.0;
  double r = 0.0;  // below-threshold mass, continuity-determined
  double loglik = 0.0;
  bool converged = false;
};

namespace detail {

inline double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct LogMoments {
  double n = 0.0;
  double sum = 0.0;       // sum of z
  double sum_log = 0.0;   // sum of ln z
  double sum_log2 = 0.0;  // sum of (ln z)^2
};

inline LogMoments log_moments(std::span<const double> data) {
  LogMoments m;
  m.n = static_cast<double>(data.size());
  for (double z : data) {
    const double lz = std::log(z);
    m.sum += z;
    m.sum_log += lz;
    m.sum_log2 += lz * lz;
  }
  return m;
}

inline double gamma_plain_loglik(const LogMoments& st, double shape, double scale, double gln) {
  return (shape - 1.0) * st.sum_log - st.sum / scale - st.n * (gln + shape * std::log(scale));
}

inline double lognormal_plain_loglik(const LogMoments& st, double mu, double sigma) {
  const double q = st.sum_log2 - 2.0 * mu * st.sum_log + st.n * mu * mu;
  return -st.sum_log - st.n * (std::log(sigma) + 0.5 * std::log(2.0 * kPi)) -
         0.5 * q / (sigma * sigma);
}

// objective closures in transformed (unconstrained) parameter space
struct BulkObjective {
  Family family;
  FitMode mode;
  double b;
  LogMoments stats;                // of the data (log scale for LogGamma)
  std::vector<double> log_data;    // Weibull needs the raw logs each eval
  double log_b;

  // x is the transformed parameter pair; returns the loglik of the family's
  // own data (for LogGamma the gamma loglik of ln z, Jacobian added later)
  double loglik(const std::vector<double>& x) const {
    switch (family) {
      case Family::Gamma:
      case Family::LogGamma: {
        const double shape = std::exp(x[0]);
        const double scale = std::exp(x[1]);
        if (!std::isfinite(shape) || !std::isfinite(scale)) return -std::numeric_limits<double>::infinity();
        const double gln = ln_gamma(shape);
        double ll = gamma_plain_loglik(stats, shape, scale, gln);
        if (mode == FitMode::TruncatedLikelihood) {
          const double mass = reg_gamma_p(shape, b / scale, gln);
          if (!(mass > 0.0)) return -std::numeric_limits<double>::infinity();
          ll -= stats.n * std::log(mass);
        }
        return ll;
      }
      case Family::LogNormal: {
        const double mu = x[0];
        const double sigma = std::exp(x[1]);
        if (!std::isfinite(sigma) || sigma <= 0.0) return -std::numeric_limits<double>::infinity();
        double ll = lognormal_plain_loglik(stats, mu, sigma);
        if (mode == FitMode::TruncatedLikelihood)
          ll -= stats.n * log_normal_cdf((log_b - mu) / sigma);
        return ll;
      }
      case Family::Weibull: {
        const double shape = std::exp(x[0]);
        const double log_scale = x[1];
        if (!std::isfinite(shape)) return -std::numeric_limits<double>::infinity();
        double sum_pow = 0.0;
        for (double lz : log_data) {
          const double e = shape * (lz - log_scale);
          if (e > 700.0) return -std::numeric_limits<double>::infinity();
          sum_pow += std::exp(e);
        }
        double ll = stats.n * (x[0] - shape * log_scale) + (shape - 1.0) * stats.sum_log - sum_pow;
        if (mode == FitMode::TruncatedLikelihood) {
          const double eb = shape * (log_b - log_scale);
          if (eb > 700.0) {
            // truncation mass is 1 to double precision
          } else {
            const double tb = std::exp(eb);
            const double mass = -std::expm1(-tb);
            if (!(mass > 0.0)) return -std::numeric_limits<double>::infinity();
            ll -= stats.n * std::log(mass);
          }
        }
        return ll;
      }
      case Family::ParetoII:
        break;
    }
    return -std::numeric_limits<double>::infinity();
  }
};

inline std::vector<double> bulk_moment_init(Family family, const LogMoments& st,
                                            std::span<const double> data) {
  const double n = st.n;
  const double mean = st.sum / n;
  double var = 0.0;
  for (double z : data) var += (z - mean) * (z - mean);
  var /= n;
  const double mean_log = st.sum_log / n;
  const double var_log = std::max(st.sum_log2 / n - mean_log * mean_log, 1e-8);

  switch (family) {
    case Family::Gamma:
    case Family::LogGamma: {
      const double shape = std::max(mean * mean / std::max(var, 1e-12), 1e-3);
      const double scale = std::max(var, 1e-12) / mean;
      return {std::log(shape), std::log(scale)};
    }
    case Family::LogNormal:
      return {mean_log, 0.5 * std::log(var_log)};
    case Family::Weibull: {
      // sd of ln Z is pi/(shape sqrt(6)); Euler-Mascheroni fixes the scale
      const double shape = std::clamp(kPi / std::sqrt(6.0 * var_log), 1e-2, 1e3);
      const double log_scale = mean_log + 0.5772156649015329 / shape;
      return {std::log(shape), log_scale};
    }
    case Family::ParetoII:
      break;
  }
  throw std::invalid_argument("bulk_moment_init: unsupported family");
}

}  // namespace detail

// Log-likelihood of the bulk objective at given parameters. Truncated mode
// subtracts n ln F(b; theta) from the plain objective.
inline double bulk_loglik(std::span<const double> data, const DistributionSpec& spec, double b,
                          FitMode mode) {
  validate_spec(spec);
  double ll = 0.0;
  for (double z : data) ll += std::log(pdf(spec, z));
  if (mode == FitMode::TruncatedLikelihood)
    ll -= static_cast<double>(data.size()) * std::log(cdf(spec, b));
  return ll;
}

// Fits the bulk family to the data at or below the threshold b by maximum
// likelihood (Nelder-Mead in log-parameter space, restarted from perturbed
// moment initialisers). The log-normal plain fit uses its closed form.
inline BulkFit fit_bulk(std::span<const double> data, Family family, double b,
                        FitMode mode = FitMode::TruncatedLikelihood) {
  if (data.size() < 5) throw data_error("fit_bulk: needs at least 5 observations");
  if (family == Family::ParetoII) throw std::invalid_argument("fit_bulk: ParetoII is a tail family");
  for (double z : data) {
    if (!(z > 0.0) || z > b || !std::isfinite(z))
      throw data_error("fit_bulk: data must lie in (0, b]");
  }

  BulkFit fit;
  fit.b = b;
  fit.mode = mode;

  // log-gamma support is z > 1; below that the likelihood is identically zero
  if (family == Family::LogGamma) {
    for (double z : data) {
      if (z <= 1.0) {
        fit.spec = {Family::LogGamma, 1.0, 1.0};
        fit.loglik = -std::numeric_limits<double>::infinity();
        fit.converged = false;
        return fit;
      }
    }
  }

  if (family == Family::LogNormal && mode == FitMode::PlainLikelihood) {
    const auto st = detail::log_moments(data);
    const double mu = st.sum_log / st.n;
    const double sigma = std::sqrt(std::max(st.sum_log2 / st.n - mu * mu, 0.0));
    if (!(sigma > 0.0)) throw numerical_error("fit_bulk: degenerate log-normal sample");
    fit.spec = {Family::LogNormal, mu, sigma};
    fit.loglik = detail::lognormal_plain_loglik(st, mu, sigma);
    fit.converged = true;
    return fit;
  }

  detail::BulkObjective obj;
  obj.family = family;
  obj.mode = mode;
  if (family == Family::LogGamma) {
    // exact reparameterization: gamma fit of ln z truncated at ln b
    std::vector<double> logs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) logs[i] = std::log(data[i]);
    obj.b = std::log(b);
    obj.stats = detail::log_moments(logs);
    obj.log_b = std::log(obj.b);
  } else {
    obj.b = b;
    obj.stats = detail::log_moments(data);
    obj.log_b = std::log(b);
    if (family == Family::Weibull) {
      obj.log_data.resize(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) obj.log_data[i] = std::log(data[i]);
    }
  }

  std::vector<double> x0;
  if (family == Family::LogGamma) {
    std::vector<double> logs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) logs[i] = std::log(data[i]);
    x0 = detail::bulk_moment_init(family, obj.stats, logs);
  } else {
    x0 = detail::bulk_moment_init(family, obj.stats, data);
  }

  auto neg = [&](const std::vector<double>& x) {
    const double ll = obj.loglik(x);
    return std::isfinite(ll) ? -ll : 1e300;
  };

  const std::vector<std::vector<double>> starts = {
      x0, {x0[0] + 0.4, x0[1] - 0.4}, {x0[0] - 0.4, x0[1] + 0.4}};
  NelderMeadResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    const auto r = nelder_mead(neg, start, 0.25, 1e-9, 2500);
    if (r.fmin < best.fmin) best = r;
  }
  const auto polish = nelder_mead(neg, best.x, 0.02, 1e-10, 2500);
  const auto& final_res = polish.fmin <= best.fmin ? polish : best;

  double p1, p2;
  if (family == Family::LogNormal) {
    p1 = final_res.x[0];
    p2 = std::exp(final_res.x[1]);
  } else if (family == Family::LogGamma) {
    // gamma (shape, scale) of ln z maps to log-gamma (shape, rate)
    p1 = std::exp(final_res.x[0]);
    p2 = 1.0 / std::exp(final_res.x[1]);
  } else {
    p1 = std::exp(final_res.x[0]);
    p2 = std::exp(final_res.x[1]);
  }
  fit.spec = {family, p1, p2};
  fit.loglik = -final_res.fmin;
  if (family == Family::LogGamma) fit.loglik -= obj.stats.sum;  // d ln z / dz jacobian
  fit.converged = (polish.converged || best.converged) && std::isfinite(fit.loglik);
  return fit;
}

// Pareto type II log-likelihood on the excess scale.
inline double pareto_tail_loglik(std::span<const double> excesses, double alpha, double beta) {
  double ll = 0.0;
  for (double y : excesses) ll += std::log(alpha / beta) - (alpha + 1.0) * std::log1p(y / beta);
  return ll;
}

// Profile MLE of the Pareto tail: for fixed beta the shape has the closed
// form alpha(beta) = n / sum ln(1 + y/beta); beta is found by golden-section
// search on the log scale. An optimum pinned at the bracket edge (the
// near-exponential ridge beta -> inf, or all-equal exceedances) is returned
// with the boundary flag set.
inline TailFit fit_pareto_tail(std::span<const double> excesses, double b) {
  const long n = static_cast<long>(excesses.size());
  if (n < 2) throw data_error("fit_pareto_tail: needs at least 2 exceedances");
  double mean_y = 0.0;
  for (double y : excesses) {
    if (!(y > 0.0) || !std::isfinite(y)) throw data_error("fit_pareto_tail: excesses must be positive");
    mean_y += y;
  }
  mean_y /= static_cast<double>(n);

  const double lo = std::log(mean_y) - 15.0;
  const double hi = std::log(mean_y) + 15.0;
  const double nd = static_cast<double>(n);

  auto sum_log1p = [&](double log_beta) {
    double s = 0.0;
    const double inv_beta = std::exp(-log_beta);
    for (double y : excesses) s += std::log1p(y * inv_beta);
    return s;
  };
  auto neg_profile = [&](double log_beta) {
    const double s = sum_log1p(log_beta);
    return -(nd * (std::log(nd / s) - log_beta - 1.0) - s);
  };
  // d(profile)/d(log beta) = W (n/S + 1) - n with W = sum u/(1+u), u = y/beta;
  // vanishes at the optimum and is computable to full precision, unlike the
  // flat profile itself
  auto profile_slope = [&](double log_beta) {
    const double inv_beta = std::exp(-log_beta);
    double s = 0.0, w = 0.0;
    for (double y : excesses) {
      const double u = y * inv_beta;
      s += std::log1p(u);
      w += u / (1.0 + u);
    }
    return w * (nd / s + 1.0) - nd;
  };

  double t = golden_section_min(neg_profile, lo, hi, 1e-10, 300);
  const bool at_edge = (t - lo) < 1e-4 * (hi - lo) || (hi - t) < 1e-4 * (hi - lo);
  if (!at_edge) {
    // secant polish on the slope; the profile itself is flat to rounding
    // near the optimum, the slope still has a clean zero crossing
    const double g_start = profile_slope(t);
    double t0 = t - 1e-4, g0 = profile_slope(t0);
    double t1 = t, g1 = g_start;
    for (int i = 0; i < 30 && g1 != g0; ++i) {
      const double t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
      if (!std::isfinite(t2) || t2 <= lo || t2 >= hi) break;
      t0 = t1;
      g0 = g1;
      t1 = t2;
      g1 = profile_slope(t1);
      if (std::fabs(t1 - t0) < 1e-14 * (1.0 + std::fabs(t1))) break;
    }
    if (std::fabs(g1) <= std::fabs(g_start)) t = t1;
  }

  TailFit fit;
  fit.b = b;
  fit.n_exceed = n;
  fit.beta = std::exp(t);
  const double s = sum_log1p(t);
  fit.alpha = nd / s;
  fit.loglik = -neg_profile(t);
  fit.boundary = at_edge;
  return fit;
}

// Mixing weight of the continuous lognormal-Pareto composite:
// r = rho / (rho + beta) with
// rho = sqrt(2 pi) alpha b sigma Phi((ln b - mu)/sigma) exp(((ln b - mu)/sigma)^2 / 2),
// evaluated in logs so deep-tail thresholds cannot overflow.
inline double scollnik_log_rho(double mu, double sigma, double alpha, double beta, double b) {
  (void)beta;
  const double t = (std::log(b) - mu) / sigma;
  return 0.5 * std::log(2.0 * kPi) + std::log(alpha) + std::log(b) + std::log(sigma) +
         log_normal_cdf(t) + 0.5 * t * t;
}

inline double scollnik_mixing_weight(double mu, double sigma, double alpha, double beta, double b) {
  const double u = std::log(beta) - scollnik_log_rho(mu, sigma, alpha, beta, b);
  return 1.0 / (1.0 + std::exp(u));
}

// 1 - r evaluated without cancellation; r can sit within an ulp of one when
// the threshold is far into the lognormal tail.
inline double scollnik_tail_weight(double mu, double sigma, double alpha, double beta, double b) {
  const double u = std::log(beta) - scollnik_log_rho(mu, sigma, alpha, beta, b);
  return 1.0 / (1.0 + std::exp(-u));
}

namespace detail {

class ScollnikObjective {
 public:
  explicit ScollnikObjective(const SortedSample& s) : s_(s) {
    const auto& v = s.values();
    prefix_log_.resize(v.size() + 1, 0.0);
    prefix_log2_.resize(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double lz = std::log(v[i]);
      prefix_log_[i + 1] = prefix_log_[i] + lz;
      prefix_log2_[i + 1] = prefix_log2_[i] + lz * lz;
    }
  }

  double loglik(double mu, double sigma, double alpha, double beta, double b) const {
    if (!(sigma > 0.0) || !(alpha > 0.0) || !(beta > 0.0) || !(b > 0.0))
      return -std::numeric_limits<double>::infinity();
    const auto& v = s_.values();
    const long n = s_.n();
    const long n1 = static_cast<long>(std::upper_bound(v.begin(), v.end(), b) - v.begin());
    const long n2 = n - n1;
    if (n1 < 1 || n2 < 1) return -std::numeric_limits<double>::infinity();

    const double t = (std::log(b) - mu) / sigma;
    const double log_rho = 0.5 * std::log(2.0 * kPi) + std::log(alpha) + std::log(b) +
                           std::log(sigma) + log_normal_cdf(t) + 0.5 * t * t;
    const double u = std::log(beta) - log_rho;
    const double log_r = -log1pexp(u);
    const double log_1mr = -log1pexp(-u);

    const double n1d = static_cast<double>(n1);
    const double sum_lz = prefix_log_[static_cast<std::size_t>(n1)];
    const double sum_lz2 = prefix_log2_[static_cast<std::size_t>(n1)];
    const double q = sum_lz2 - 2.0 * mu * sum_lz + n1d * mu * mu;
    double ll = n1d * (log_r - log_normal_cdf(t)) - sum_lz -
                n1d * (std::log(sigma) + 0.5 * std::log(2.0 * kPi)) -
                0.5 * q / (sigma * sigma);

    double tail_sum = 0.0;
    for (long i = n1; i < n; ++i) tail_sum += std::log1p((v[static_cast<std::size_t>(i)] - b) / beta);
    ll += static_cast<double>(n2) * (log_1mr + std::log(alpha) - std::log(beta)) -
          (alpha + 1.0) * tail_sum;
    return ll;
  }

 private:
  const SortedSample& s_;
  std::vector<double> prefix_log_;
  std::vector<double> prefix_log2_;
};

}  // namespace detail

// Composite log-likelihood at explicit parameters (test and report hook).
inline double scollnik_loglik(const SortedSample& s, double mu, double sigma, double alpha,
                              double beta, double b) {
  return detail::ScollnikObjective(s).loglik(mu, sigma, alpha, beta, b);
}

// Simultaneous fit of the continuous lognormal-Pareto composite. The
// threshold is profiled over interior order statistics (all of them for
// small samples, a coarse-then-refine scan for large ones) with the four
// remaining parameters maximised per candidate, then a joint polish runs
// from the best profile point with the threshold continuous.
inline ScollnikFit fit_scollnik(const SortedSample& s) {
  const long n = s.n();
  if (n < 20) throw std::domain_error("fit_scollnik: needs n >= 20");
  if (!(s.min() > 0.0)) throw data_error("fit_scollnik: sample must be positive");

  const detail::ScollnikObjective obj(s);
  const long lo = 5, hi = n - 5;

  // moment-based cold start around a candidate threshold
  auto cold_start = [&](double b) {
    const long n90 = std::max<long>(static_cast<long>(0.9 * static_cast<double>(n)), 2);
    double sum = 0.0, sum2 = 0.0;
    for (long i = 1; i <= n90; ++i) {
      const double lz = std::log(s.order_stat(i));
      sum += lz;
      sum2 += lz * lz;
    }
    const double mu0 = sum / static_cast<double>(n90);
    const double sig0 =
        std::sqrt(std::max(sum2 / static_cast<double>(n90) - mu0 * mu0, 2.5e-3));
    const long kh = std::max<long>(static_cast<long>(std::sqrt(static_cast<double>(n))), 2);
    const double xi = hill(s, kh).xi_hat;
    const double a0 = std::clamp(xi > 1e-6 ? 1.0 / xi : 10.0, 0.2, 20.0);
    double excess = 0.0;
    long cnt = 0;
    for (long i = n; i >= 1 && s.order_stat(i) > b; --i) {
      excess += s.order_stat(i) - b;
      ++cnt;
    }
    const double me = cnt > 0 ? excess / static_cast<double>(cnt) : 1.0;
    const double b0 = std::max(a0 > 1.05 ? me * (a0 - 1.0) : me, 1e-6);
    return std::vector<double>{mu0, std::log(sig0), std::log(a0), std::log(b0)};
  };

  struct Best {
    double ll = -std::numeric_limits<double>::infinity();
    std::vector<double> x;
    long c = 0;
    bool converged = false;
  } best;

  std::vector<double> warm;
  auto scan = [&](const std::vector<long>& cs) {
    int since_cold = 0;
    for (long c : cs) {
      const double b = s.order_stat(c);
      auto neg = [&](const std::vector<double>& x) {
        const double ll = obj.loglik(x[0], std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), b);
        return std::isfinite(ll) ? -ll : 1e300;
      };
      NelderMeadResult r;
      if (!warm.empty() && since_cold < 8) {
        r = nelder_mead(neg, warm, 0.08, 1e-9, 700);
        ++since_cold;
      } else {
        r = nelder_mead(neg, cold_start(b), 0.3, 1e-9, 1600);
        since_cold = 0;
      }
      warm = r.x;
      if (-r.fmin > best.ll) {
        best.ll = -r.fmin;
        best.x = r.x;
        best.c = c;
        best.converged = r.converged;
      }
    }
  };

  if (hi - lo <= 600) {
    std::vector<long> candidates;
    for (long c = lo; c <= hi; ++c) candidates.push_back(c);
    scan(candidates);
  } else {
    // coarse grid, then successively finer grids around the running best
    long gap = (hi - lo) / 63 + 1;
    std::vector<long> grid;
    for (long c = lo; c <= hi; c += gap) grid.push_back(c);
    if (grid.back() != hi) grid.push_back(hi);
    scan(grid);
    while (gap > 1) {
      const long lo_r = std::max(lo, best.c - gap), hi_r = std::min(hi, best.c + gap);
      const long next_gap = std::max<long>(gap / 16, 1);
      grid.clear();
      for (long c = lo_r; c <= hi_r; c += next_gap)
        if (c != best.c) grid.push_back(c);
      warm = best.x;
      scan(grid);
      gap = next_gap;
      if (gap == 1) break;
    }
  }
  if (!std::isfinite(best.ll)) throw numerical_error("fit_scollnik: no profile candidate converged");

  // joint polish with the threshold continuous between the interior stats
  const double b_lo = s.order_stat(lo), b_hi = s.order_stat(hi);
  auto neg_joint = [&](const std::vector<double>& x) {
    const double b = x[4];
    if (!(b > b_lo) || !(b < b_hi)) return 1e300;
    const double ll = obj.loglik(x[0], std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), b);
    return std::isfinite(ll) ? -ll : 1e300;
  };
  std::vector<double> xj = best.x;
  xj.push_back(s.order_stat(best.c));
  const auto polish = nelder_mead(neg_joint, xj, 0.02, 1e-10, 4000);

  ScollnikFit fit;
  const bool use_polish = -polish.fmin >= best.ll;
  const auto& x = use_polish ? polish.x : xj;
  fit.mu = x[0];
  fit.sigma = std::exp(x[1]);
  fit.alpha = std::exp(x[2]);
  fit.beta = std::exp(x[3]);
  fit.b = use_polish ? polish.x[4] : s.order_stat(best.c);
  fit.loglik = use_polish ? -polish.fmin : best.ll;
  fit.r = scollnik_mixing_weight(fit.mu, fit.sigma, fit.alpha, fit.beta, fit.b);
  fit.converged = (use_polish && polish.converged) || best.converged;
  if (!std::isfinite(fit.loglik)) throw numerical_error("fit_scollnik: non-finite likelihood");
  return fit;
}

}  // namespace eot
