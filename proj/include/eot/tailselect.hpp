#pragma once

// Fixed-threshold selection methods M1-M6 on a sorted claim sample.
//
//   M1  fixed quantile rule          k = eps * n
//   M2  square root rule             k = sqrt(n)
//   M3  empirical rule               k = n^(2/3) / log(log(n))
//   M4  minimum-AMSE Hill            k minimising the asymptotic MSE of the
//                                    Hill estimator, second-order parameters
//                                    plugged in
//   M5  exponentiality test          smallest k whose windowed statistic
//                                    Q_n stays at or above 1.25
//   M6  Gertensgarbe plot            crossing of progressive and retrograde
//                                    sequential Mann-Kendall series on the
//                                    sorted-sample differences
//
// Every selector returns the threshold as an order statistic of the sample:
// b_hat = z_(index) with 1 <= index < n, k the exceedance count n - index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eot/errors.hpp"

namespace eot {

enum class Method { M1, M2, M3, M4, M5, M6, M7 };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::M1: return "m1";
    case Method::M2: return "m2";
    case Method::M3: return "m3";
    case Method::M4: return "m4";
    case Method::M5: return "m5";
    case Method::M6: return "m6";
    case Method::M7: return "m7";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s.size() == 2 && s[0] == 'm' && s[1] >= '1' && s[1] <= '7')
    return static_cast<Method>(s[1] - '1');
  throw std::invalid_argument("unknown method: " + s);
}

class SortedSample {
 public:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
  }

  long n() const { return static_cast<long>(values_.size()); }
  const std::vector<double>& values() const { return values_; }

  // 1-based order statistic z_(i)
  double order_stat(long i) const { return values_[static_cast<std::size_t>(i - 1)]; }

  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

struct ThresholdEstimate {
  Method method;
  long k;        // exceedance count above the threshold
  long index;    // 1-based order-statistic index, b_hat = z_(index)
  double b_hat;
  bool warn = false;  // clamped or fallback result
};

struct HillEstimate {
  long k;
  double xi_hat;
};

struct SecondOrderEstimates {
  double rho_hat;     // < 0
  double lambda_hat;  // > 0
  long k1;            // evaluation level
  bool weak = false;  // ratio statistic degenerate or clamped
};

namespace detail {

// nearest integer to x, halves away from zero
inline long nearest_index(double x) { return std::llround(x); }

inline ThresholdEstimate order_stat_estimate(Method m, const SortedSample& s, double k_real) {
  const long n = s.n();
  const long index = nearest_index(static_cast<double>(n) - k_real);
  if (index < 1 || index > n - 1)
    throw no_threshold_error(std::string(method_name(m)) + ": index outside [1, n-1]");
  return {m, n - index, index, s.order_stat(index), false};
}

inline void require_positive(const SortedSample& s, const char* who) {
  if (!(s.min() > 0.0)) throw std::domain_error(std::string(who) + ": sample must be positive");
}

// Fenwick tree over value ranks; counts strictly smaller elements to the left.
class LeftSmallerCounter {
 public:
  explicit LeftSmallerCounter(const std::vector<double>& x) : tree_(x.size() + 1, 0) {
    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    ranks_.reserve(x.size());
    for (double v : x) {
      ranks_.push_back(static_cast<long>(
          std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin() + 1));
    }
  }

  // number of previously added elements strictly below x[i], then add x[i]
  long count_and_add(std::size_t i) {
    const long r = ranks_[i];
    long cnt = 0;
    for (long j = r - 1; j > 0; j -= j & -j) cnt += tree_[static_cast<std::size_t>(j)];
    for (long j = r; j < static_cast<long>(tree_.size()); j += j & -j)
      ++tree_[static_cast<std::size_t>(j)];
    return cnt;
  }

 private:
  std::vector<long> tree_;
  std::vector<long> ranks_;
};

}  // namespace detail

// M1: k = eps * n
inline ThresholdEstimate select_fixed_quantile(const SortedSample& s, double eps = 0.05) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("select_fixed_quantile: eps outside (0,1)");
  const double k = eps * static_cast<double>(s.n());
  if (k < 1.0) throw no_threshold_error("select_fixed_quantile: eps*n below one exceedance");
  return detail::order_stat_estimate(Method::M1, s, k);
}

// M2: k = sqrt(n)
inline ThresholdEstimate select_square_root(const SortedSample& s) {
  if (s.n() < 4) throw no_threshold_error("select_square_root: needs n >= 4");
  return detail::order_stat_estimate(Method::M2, s, std::sqrt(static_cast<double>(s.n())));
}

// M3: k = n^(2/3) / log(log(n))
inline ThresholdEstimate select_empirical_rule(const SortedSample& s) {
  if (s.n() < 16) throw no_threshold_error("select_empirical_rule: needs n >= 16");
  const double n = static_cast<double>(s.n());
  const double k = std::pow(n, 2.0 / 3.0) / std::log(std::log(n));
  return detail::order_stat_estimate(Method::M3, s, k);
}

// Hill estimator of the tail index xi = 1/alpha from the top k log-spacings.
// Evaluated on value ratios, which keeps the estimate scale invariant.
inline HillEstimate hill(const SortedSample& s, long k) {
  const long n = s.n();
  if (k < 1 || k > n - 1) throw std::domain_error("hill: k outside [1, n-1]");
  const double base = s.order_stat(n - k);
  if (!(base > 0.0)) throw std::domain_error("hill: z_(n-k) must be positive");
  double sum = 0.0;
  for (long i = 1; i <= k; ++i) sum += std::log(s.order_stat(n - i + 1) / base);
  return {k, sum / static_cast<double>(k)};
}

// Second-order tail parameters (rho, lambda) from the three log-moment
// statistics M^(j)(k1), ratio estimator with tuning tau = 0, and the
// Hall-class scale estimator evaluated at k1 = floor(n^0.999).
inline SecondOrderEstimates estimate_second_order(const SortedSample& s) {
  const long n = s.n();
  if (n < 100) throw std::domain_error("estimate_second_order: needs n >= 100");
  detail::require_positive(s, "estimate_second_order");
  const long k1 = std::min(static_cast<long>(std::pow(static_cast<double>(n), 0.999)), n - 1);

  const double base = s.order_stat(n - k1);
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
  for (long i = 1; i <= k1; ++i) {
    const double e = std::log(s.order_stat(n - i + 1) / base);
    m1 += e;
    m2 += e * e;
    m3 += e * e * e;
  }
  const double kd = static_cast<double>(k1);
  m1 /= kd;
  m2 /= kd;
  m3 /= kd;
  if (!(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0))
    throw numerical_error("estimate_second_order: degenerate log spacings");

  const double num = std::log(m1) - 0.5 * std::log(m2 / 2.0);
  const double den = 0.5 * std::log(m2 / 2.0) - std::log(m3 / 6.0) / 3.0;
  const double t = num / den;

  bool weak = false;
  double rho = -std::fabs(3.0 * (t - 1.0) / (t - 3.0));
  if (!std::isfinite(rho) || rho < -50.0) {
    rho = -50.0;
    weak = true;
  }
  if (rho > -1e-8) {
    rho = -1e-8;
    weak = true;
  }

  // Hall-class scale: lambda = (k1/n)^rho [d(rho)D(0) - D(rho)] /
  //                                       [d(rho)D(rho) - D(2rho)]
  double d_r = 0.0, d0 = 0.0, dd_r = 0.0, dd_2r = 0.0, dd_0 = 0.0;
  for (long i = 1; i <= k1; ++i) {
    const double frac = static_cast<double>(i) / kd;
    const double w_r = std::pow(frac, -rho);
    const double u = static_cast<double>(i) *
                     std::log(s.order_stat(n - i + 1) / s.order_stat(n - i));
    d_r += w_r;
    d0 += 1.0;
    dd_r += w_r * u;
    dd_2r += w_r * w_r * u;
    dd_0 += u;
  }
  d_r /= kd;
  d0 /= kd;
  dd_r /= kd;
  dd_2r /= kd;
  dd_0 /= kd;

  const double denom = d_r * dd_r - dd_2r;
  double lambda = std::pow(kd / static_cast<double>(n), rho) * (d_r * dd_0 - dd_r) / denom;
  lambda = std::fabs(lambda);
  if (!std::isfinite(lambda) || lambda < 1e-12) {
    lambda = 1e-12;
    weak = true;
  }
  return {rho, lambda, k1, weak};
}

// k0 = floor( ((1-rho)^2 n^(-2 rho) / (-2 rho lambda^2))^(1/(1-2 rho)) ),
// evaluated in logs so extreme rho estimates cannot overflow.
inline double min_amse_k0(double rho, double lambda, long n) {
  const double log_k0 = (2.0 * std::log1p(-rho) - 2.0 * rho * std::log(static_cast<double>(n)) -
                         std::log(-2.0 * rho) - 2.0 * std::log(lambda)) /
                        (1.0 - 2.0 * rho);
  return std::floor(std::exp(log_k0));
}

// M4: plug the second-order estimates into the k0 formula; the result is
// clamped to [1, n-1] with a warning instead of failing.
inline ThresholdEstimate select_min_amse_hill(const SortedSample& s) {
  const long n = s.n();
  const SecondOrderEstimates so = estimate_second_order(s);
  double k0d = min_amse_k0(so.rho_hat, so.lambda_hat, n);
  bool warn = so.weak;
  if (!std::isfinite(k0d) || k0d > static_cast<double>(n - 1)) {
    k0d = static_cast<double>(n - 1);
    warn = true;
  }
  if (k0d < 1.0) {
    k0d = 1.0;
    warn = true;
  }
  const long k0 = static_cast<long>(k0d);
  return {Method::M4, k0, n - k0, s.order_stat(n - k0), warn};
}

// M5: Guillou-Hall exponentiality test. U_i are the scaled log-spacings,
// T_n(k) the weighted-sum statistic, Q_n(k) its root mean square over the
// centred window of half-width floor(k/2). Selected k is the smallest k with
// Q_n(j) >= 1.25 for every admissible j >= k; if no k qualifies the deepest
// admissible k is returned with the warning flag set.
inline ThresholdEstimate select_exponentiality(const SortedSample& s) {
  const long n = s.n();
  if (n < 4) throw no_threshold_error("select_exponentiality: sample too small");
  detail::require_positive(s, "select_exponentiality");

  std::vector<double> log_z(static_cast<std::size_t>(n));
  for (long i = 1; i <= n; ++i) log_z[static_cast<std::size_t>(i - 1)] = std::log(s.order_stat(i));
  auto u_spacing = [&](long i) {
    return static_cast<double>(i) *
           (log_z[static_cast<std::size_t>(n - i)] - log_z[static_cast<std::size_t>(n - i - 1)]);
  };

  long kmax = 0;
  for (long k = 1; k + k / 2 < n; ++k) kmax = k;
  if (kmax < 1) throw no_threshold_error("select_exponentiality: no admissible window");
  const long tmax = kmax + kmax / 2;  // largest T index any window touches

  std::vector<double> t_sq_prefix(static_cast<std::size_t>(tmax + 1), 0.0);
  double s1 = 0.0;   // sum of U_i
  double sw = 0.0;   // sum of (k - 2i + 1) U_i
  for (long k = 1; k <= tmax; ++k) {
    const double u = u_spacing(k);
    sw += s1 + (1.0 - static_cast<double>(k)) * u;
    s1 += u;
    double t = 0.0;
    if (s1 > 0.0) {
      const double kd = static_cast<double>(k);
      t = std::sqrt(3.0 / (kd * kd * kd)) * sw / (s1 / kd);
    }
    t_sq_prefix[static_cast<std::size_t>(k)] = t_sq_prefix[static_cast<std::size_t>(k - 1)] + t * t;
  }

  auto q_stat = [&](long k) {
    const long h = k / 2;
    const double sum = t_sq_prefix[static_cast<std::size_t>(k + h)] -
                       t_sq_prefix[static_cast<std::size_t>(k - h - 1)];
    return std::sqrt(sum / static_cast<double>(2 * h + 1));
  };

  long last_bad = 0;
  for (long k = 1; k <= kmax; ++k)
    if (q_stat(k) < 1.25) last_bad = k;

  if (last_bad == kmax) {
    // infimum set empty: exponentiality never rejected
    return {Method::M5, kmax, n - kmax, s.order_stat(n - kmax), true};
  }
  const long khat = last_bad + 1;
  return {Method::M5, khat, n - khat, s.order_stat(n - khat), false};
}

enum class GertensgarbeVariance { Displayed, Classical };

// M6: change point of the sorted-sample differences via progressive and
// retrograde sequential Mann-Kendall series. The retrograde series is
// computed on the reversed differences, negated and re-indexed onto the
// progressive axis; the estimate is the first strict sign change of the gap.
inline ThresholdEstimate select_gertensgarbe(
    const SortedSample& s, GertensgarbeVariance variance = GertensgarbeVariance::Displayed) {
  const long n = s.n();
  if (n < 10) throw no_threshold_error("select_gertensgarbe: needs n >= 10");
  const long m = n - 1;

  std::vector<double> diffs(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i)
    diffs[static_cast<std::size_t>(i)] = s.order_stat(i + 2) - s.order_stat(i + 1);

  auto mk_series = [&](const std::vector<double>& x) {
    detail::LeftSmallerCounter counter(x);
    std::vector<double> u(x.size());
    double cum = 0.0;
    for (long i = 1; i <= m; ++i) {
      cum += static_cast<double>(counter.count_and_add(static_cast<std::size_t>(i - 1)));
      const double di = static_cast<double>(i);
      const double mean = di * (di - 1.0) / 4.0;
      const double var = variance == GertensgarbeVariance::Displayed
                             ? di * (di + 1.0) * (2.0 * di + 5.0) / 72.0
                             : di * (di - 1.0) * (2.0 * di + 5.0) / 72.0;
      u[static_cast<std::size_t>(i - 1)] = var > 0.0 ? (cum - mean) / std::sqrt(var) : 0.0;
    }
    return u;
  };

  const std::vector<double> prog = mk_series(diffs);
  std::vector<double> reversed(diffs.rbegin(), diffs.rend());
  const std::vector<double> retro = mk_series(reversed);

  // gap at Delta position i: U_i - (-Utilde_(m+1-i)). The aligned series
  // start and end at swapped values (U_1 = 0, W_1 = U_m and vice versa), so
  // for trending data the gap changes sign at least once. Noise can produce
  // transient flip pairs before the trend-driven crossing; the change point
  // is the last sign change.
  auto gap = [&](long i) {
    return prog[static_cast<std::size_t>(i - 1)] + retro[static_cast<std::size_t>(m - i)];
  };

  long crossing = 0;
  for (long i = 2; i <= m; ++i) {
    const double prev = gap(i - 1), cur = gap(i);
    const bool flip = (prev > 0.0 && cur < 0.0) || (prev < 0.0 && cur > 0.0) ||
                      (prev == 0.0 && cur != 0.0) || (prev != 0.0 && cur == 0.0);
    if (flip) crossing = std::fabs(prev) <= std::fabs(cur) ? i - 1 : i;
  }
  if (crossing == 0) throw no_threshold_error("select_gertensgarbe: series never cross");
  return {Method::M6, n - crossing, crossing, s.order_stat(crossing), false};
}

// Dispatcher for the fixed-threshold selectors. M7 (simultaneous estimation)
// lives with the fitting code.
inline ThresholdEstimate select_threshold(Method m, const SortedSample& s) {
  switch (m) {
    case Method::M1: return select_fixed_quantile(s);
    case Method::M2: return select_square_root(s);
    case Method::M3: return select_empirical_rule(s);
    case Method::M4: return select_min_amse_hill(s);
    case Method::M5: return select_exponentiality(s);
    case Method::M6: return select_gertensgarbe(s);
    case Method::M7: break;
  }
  throw std::invalid_argument("select_threshold: M7 requires the composite fit");
}

}  // namespace eot
