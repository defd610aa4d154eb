#pragma once

// Monte Carlo estimation of the reserve quantile q_eps of the compound
// Poisson aggregate loss X = sum_{i=1}^{N} Z_i with composite severities.
// One aggregate-loss realisation draws N ~ Poisson(lambda), splits it
// binomially into below- and above-threshold claims, sums truncated-bulk
// inversions and shifted Pareto excesses.
//
// Simulation i always runs on its own counter-based substream (seed, stream,
// i), so the estimate is bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "eot/composite.hpp"
#include "eot/errors.hpp"
#include "eot/rng.hpp"

namespace eot {

struct ReserveQuery {
  double lambda = 0.0;
  double eps = 0.0;
  long m = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int workers = 0;  // 0: hardware concurrency
};

struct ReserveEstimate {
  double q_hat = 0.0;
  ReserveQuery query;
  std::string model_digest;
};

inline void validate_reserve_query(const ReserveQuery& q) {
  if (!(q.lambda > 0.0)) throw std::domain_error("reserve: lambda must be positive");
  if (!(q.eps > 0.0 && q.eps < 1.0)) throw std::domain_error("reserve: eps outside (0,1)");
  if (q.m < 1) throw std::domain_error("reserve: m must be positive");
  if (q.m > (1ll << 32)) throw std::domain_error("reserve: m exceeds the substream space");
  if (static_cast<double>(q.m) * q.eps < 10.0)
    throw numerical_error("reserve: m*eps below 10, quantile index unresolvable");
}

inline double aggregate_loss_sample(const CompositeSampler& sampler, double lambda, Philox& rng) {
  const long n = poisson_draw(rng, lambda);
  const long n_below = binomial_draw(rng, n, sampler.model().p_below);
  double total = 0.0;
  for (long j = 0; j < n_below; ++j) total += sampler.draw_bulk(rng);
  for (long j = n_below; j < n; ++j) total += sampler.draw_tail(rng);
  return total;
}

inline double aggregate_loss_sample(const CompositeModel& model, double lambda, Philox& rng) {
  const CompositeSampler sampler(model);
  return aggregate_loss_sample(sampler, lambda, rng);
}

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// m aggregate-loss simulations into out[0..m), partitioned over workers.
inline void simulate_aggregate_losses(const CompositeModel& model, double lambda, long m,
                                      std::uint64_t seed, std::uint64_t stream, int workers,
                                      std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(m));
  const int w = std::min<long>(resolve_workers(workers), std::max<long>(m, 1));
  auto run_chunk = [&](long begin, long end) {
    const CompositeSampler sampler(model);
    for (long i = begin; i < end; ++i) {
      Philox rng(seed, stream, static_cast<std::uint32_t>(i));
      out[static_cast<std::size_t>(i)] = aggregate_loss_sample(sampler, lambda, rng);
    }
  };
  if (w <= 1) {
    run_chunk(0, m);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    const long begin = m * t / w;
    const long end = m * (t + 1) / w;
    pool.emplace_back(run_chunk, begin, end);
  }
  for (auto& th : pool) th.join();
}

// 1-based order-statistic index: nearest integer to (1-eps)m, clamped.
inline long reserve_order_index(double eps, long m) {
  return std::clamp<long>(std::llround((1.0 - eps) * static_cast<double>(m)), 1, m);
}

// Order statistics of a simulated batch at several eps levels; the buffer is
// reused by nth_element, which never changes the multiset.
inline std::vector<double> reserve_quantiles(std::vector<double>& losses,
                                             const std::vector<double>& eps_levels) {
  std::vector<double> out;
  out.reserve(eps_levels.size());
  const long m = static_cast<long>(losses.size());
  for (double eps : eps_levels) {
    const long idx = reserve_order_index(eps, m);
    std::nth_element(losses.begin(), losses.begin() + (idx - 1), losses.end());
    out.push_back(losses[static_cast<std::size_t>(idx - 1)]);
  }
  return out;
}

inline ReserveEstimate estimate_reserve(const CompositeModel& model, const ReserveQuery& query) {
  validate_reserve_query(query);
  std::vector<double> losses;
  simulate_aggregate_losses(model, query.lambda, query.m, query.seed, query.stream, query.workers,
                            losses);
  const auto q = reserve_quantiles(losses, {query.eps});
  return {q[0], query, model_digest(model)};
}

// Shares one simulation pass across several eps levels.
inline std::vector<ReserveEstimate> estimate_reserve_multi(const CompositeModel& model,
                                                           ReserveQuery query,
                                                           const std::vector<double>& eps_levels) {
  std::vector<ReserveEstimate> out;
  std::vector<double> losses;
  for (double eps : eps_levels) {
    auto q = query;
    q.eps = eps;
    validate_reserve_query(q);
  }
  simulate_aggregate_losses(model, query.lambda, query.m, query.seed, query.stream, query.workers,
                            losses);
  const std::string digest = model_digest(model);
  const auto quantiles = reserve_quantiles(losses, eps_levels);
  for (std::size_t i = 0; i < eps_levels.size(); ++i) {
    auto q = query;
    q.eps = eps_levels[i];
    out.push_back({quantiles[i], q, digest});
  }
  return out;
}

}  // namespace eot
