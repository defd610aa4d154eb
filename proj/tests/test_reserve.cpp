#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "eot/composite.hpp"
#include "eot/reserve.hpp"
#include "oracles.hpp"

using namespace eot;

namespace {

CompositeModel table_model(double gamma_tail = 0.08) {
  const DistributionSpec bulk{Family::Gamma, 10.0, 1.0};
  const double b = quantile(bulk, 1.0 - gamma_tail);
  return make_composite(bulk, b, 2.5, 75.0, 1.0 - gamma_tail, PMode::Theoretical);
}

// E[Z] of a composite model: bulk part by quadrature, Pareto part closed form
double mean_severity(const CompositeModel& m) {
  auto zf = [&](double z) { return z <= support_min(m.bulk) ? 0.0 : z * composite_pdf(m, z); };
  const double bulk_part = oracle::integrate(zf, 0.0, m.b, 1e-12);
  const double tail_mean = m.b + m.tail_beta / (m.tail_alpha - 1.0);
  return bulk_part + (1.0 - m.p_below) * tail_mean;
}

}  // namespace

TEST_SUITE_BEGIN("reserve");

TEST_CASE("aggregate loss edge draws") {
  const auto m = table_model();
  const CompositeSampler sampler(m);

  // a vanishing claim rate gives an empty sum
  Philox rng(1, 30);
  CHECK(aggregate_loss_sample(sampler, 1e-12, rng) == 0.0);

  // all-bulk model with a near point mass at c: X ~ N* c
  const double c = 5.0;
  auto spike = make_composite({Family::Gamma, 1e4, c / 1e4}, 2.0 * c, 2.5, 75.0, 1.0,
                              PMode::Theoretical);
  Philox rng2(2, 30);
  for (int i = 0; i < 50; ++i) {
    const double x = aggregate_loss_sample(spike, 20.0, rng2);
    const double claims = std::round(x / c);
    CHECK(std::fabs(x - claims * c) < 0.05 * c * std::max(claims, 1.0));
  }
}

TEST_CASE("aggregate loss mean matches lambda times the quadrature severity mean") {
  const auto m = table_model();
  const double expect = 50.0 * mean_severity(m);
  const CompositeSampler sampler(m);
  double sum = 0.0;
  const long sims = 200000;
  for (long i = 0; i < sims; ++i) {
    Philox rng(77, 31, static_cast<std::uint32_t>(i));
    sum += aggregate_loss_sample(sampler, 50.0, rng);
  }
  CHECK(sum / static_cast<double>(sims) == doctest::Approx(expect).epsilon(0.005));
}

TEST_CASE("mean aggregate loss is linear in lambda") {
  const auto m = table_model();
  std::vector<double> losses;
  simulate_aggregate_losses(m, 50.0, 40000, 5, 7, 0, losses);
  double mean50 = 0.0;
  for (double x : losses) mean50 += x;
  mean50 /= static_cast<double>(losses.size());
  simulate_aggregate_losses(m, 500.0, 10000, 5, 8, 0, losses);
  double mean500 = 0.0;
  for (double x : losses) mean500 += x;
  mean500 /= static_cast<double>(losses.size());
  CHECK(mean500 / mean50 == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("order statistic index arithmetic") {
  CHECK(reserve_order_index(0.01, 1000) == 990);
  CHECK(reserve_order_index(0.05, 1000) == 950);
  CHECK(reserve_order_index(0.5, 2) == 1);
  CHECK(reserve_order_index(1e-9, 100) == 100);
}

TEST_CASE("query validation") {
  const auto m = table_model();
  ReserveQuery q{50.0, 0.01, 1000, 1, 0, 1};
  CHECK_NOTHROW(validate_reserve_query(q));
  q.m = 500;  // m*eps = 5
  CHECK_THROWS_AS(estimate_reserve(m, q), numerical_error);
  q.m = 1000;
  q.eps = 0.0;
  CHECK_THROWS_AS(estimate_reserve(m, q), std::domain_error);
  q.eps = 0.01;
  q.lambda = -1.0;
  CHECK_THROWS_AS(estimate_reserve(m, q), std::domain_error);
}

TEST_CASE("reserve estimates are deterministic and worker-count independent") {
  const auto m = table_model();
  ReserveQuery q{5.0, 0.05, 20000, 42, 11, 1};
  const auto a = estimate_reserve(m, q);
  const auto b = estimate_reserve(m, q);
  CHECK(a.q_hat == b.q_hat);
  q.workers = 2;
  CHECK(estimate_reserve(m, q).q_hat == a.q_hat);
  q.workers = 8;
  CHECK(estimate_reserve(m, q).q_hat == a.q_hat);
  CHECK(a.model_digest == model_digest(m));

  // different seed, different draw
  q.workers = 1;
  q.seed = 43;
  CHECK(estimate_reserve(m, q).q_hat != a.q_hat);
}

TEST_CASE("reserve quantiles are monotone in the level") {
  const auto m = table_model();
  ReserveQuery q{5.0, 0.05, 20000, 9, 12, 0};
  const auto est = estimate_reserve_multi(m, q, {0.005, 0.01, 0.05});
  CHECK(est[0].q_hat >= est[1].q_hat);
  CHECK(est[1].q_hat >= est[2].q_hat);
  // shared simulation pass equals the one-level call
  CHECK(est[2].q_hat == estimate_reserve(m, q).q_hat);
}

TEST_CASE("quantile estimator variance is consistent with its asymptotics") {
  const auto m = table_model();
  const double eps = 0.05;
  const long sims = 100000;
  std::vector<double> qs;
  std::vector<double> losses;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    ReserveQuery q{5.0, eps, sims, seed, 13, 0};
    const auto est = estimate_reserve(m, q);
    qs.push_back(est.q_hat);
    if (seed == 100) simulate_aggregate_losses(m, 5.0, sims, seed, 13, 0, losses);
  }
  double mean_q = 0.0;
  for (double v : qs) mean_q += v;
  mean_q /= static_cast<double>(qs.size());
  double sd_q = 0.0;
  for (double v : qs) sd_q += (v - mean_q) * (v - mean_q);
  sd_q = std::sqrt(sd_q / static_cast<double>(qs.size() - 1));

  // kernel density of the aggregate loss at the quantile (Silverman width)
  double mean_x = 0.0;
  for (double x : losses) mean_x += x;
  mean_x /= static_cast<double>(losses.size());
  double sd_x = 0.0;
  for (double x : losses) sd_x += (x - mean_x) * (x - mean_x);
  sd_x = std::sqrt(sd_x / static_cast<double>(losses.size()));
  const double h = 1.06 * sd_x * std::pow(static_cast<double>(sims), -0.2);
  double dens = 0.0;
  for (double x : losses)
    dens += std::exp(-0.5 * ((x - mean_q) / h) * ((x - mean_q) / h));
  dens /= static_cast<double>(sims) * h * kSqrtTwoPi;

  const double sd_asym = std::sqrt(eps * (1.0 - eps) / static_cast<double>(sims)) / dens;
  CHECK(sd_q / sd_asym > 0.5);
  CHECK(sd_q / sd_asym < 2.0);
}

TEST_SUITE_END();
