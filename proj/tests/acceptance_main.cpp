// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 3-5 need the Danish fire claim file (2492 losses
// in millions DKK); its location is taken from EOT_DANISH_DATA or
// <EOT_SOURCE_DIR>/data/danish.csv, and the criteria report a data-unavailable
// failure when the file is absent.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eot/claims_io.hpp"
#include "eot/composite.hpp"
#include "eot/distributions.hpp"
#include "eot/fitting.hpp"
#include "eot/reserve.hpp"
#include "eot/study.hpp"
#include "eot/tailselect.hpp"
#include "oracles.hpp"

using namespace eot;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

bool within_rel(double value, double target, double tol) {
  return std::fabs(value - target) <= tol * std::fabs(target);
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

CompositeModel table_model(Family family, double p1, double p2, double quantile_level) {
  const DistributionSpec bulk{family, p1, p2};
  const double b = quantile(bulk, quantile_level);
  return make_composite(bulk, b, 2.5, 75.0, quantile_level, PMode::Theoretical);
}

std::optional<ClaimDataset> danish_data() {
  std::vector<std::string> candidates;
  if (const char* env = std::getenv("EOT_DANISH_DATA")) candidates.push_back(env);
  if (const char* src = std::getenv("EOT_SOURCE_DIR"))
    candidates.push_back(std::string(src) + "/data/danish.csv");
  candidates.push_back("data/danish.csv");
  candidates.push_back("../data/danish.csv");
  for (const auto& path : candidates) {
    try {
      auto ds = load_claims(path, 1);
      if (ds.n < 100) {
        // a loss column in a multi-column file
        ds = load_claims(path, 2);
      }
      return ds;
    } catch (const data_error&) {
      // try the next location, or column 2 of this one
      try {
        return load_claims(path, 2);
      } catch (const data_error&) {
      }
    }
  }
  return std::nullopt;
}

double round2(double v) {
  return std::round(v * 100.0) / 100.0;  // half away from zero for positives
}

// --- criterion 1: Table 2 Gamma-Pareto ground truth + runtime bound ---
void criterion_1() {
  const auto model = table_model(Family::Gamma, 10.0, 1.0, 0.92);
  ReserveQuery q{50.0, 0.05, 1000000, 20240808, 0, 0};
  const auto t0 = std::chrono::steady_clock::now();
  const auto est = estimate_reserve_multi(model, q, {0.05, 0.01, 0.005});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok95 = within_rel(est[0].q_hat, 1093.48, 0.015);
  const bool ok99 = within_rel(est[1].q_hat, 1520.20, 0.02);
  const bool ok995 = within_rel(est[2].q_hat, 1780.10, 0.025);
  const bool ok_time = secs < 60.0;
  report(1, ok95 && ok99 && ok995 && ok_time,
         fmt("Ga-P 92%% reserves m=1e6: q95 %.2f (1093.48 +-1.5%%) q99 %.2f (1520.20 +-2%%) "
             "q995 %.2f (1780.10 +-2.5%%), %.1f s (<60 s)",
             est[0].q_hat, est[1].q_hat, est[2].q_hat, secs));
}

// --- criterion 2: Table 2 spot check, LogGamma row with Weibull fallback ---
void criterion_2() {
  const auto lg_model = table_model(Family::LogGamma, 6.0, 3.04, 0.98);
  ReserveQuery lg_q{500.0, 0.05, 1000000, 20240808, 1, 0};
  const double lg = estimate_reserve(lg_model, lg_q).q_hat;
  const bool lg_ok = within_rel(lg, 6020.76, 0.02);

  const auto we_model = table_model(Family::Weibull, 2.0, 11.28, 0.92);
  ReserveQuery we_q{50.0, 0.01, 1000000, 20240808, 2, 0};
  const double we = estimate_reserve(we_model, we_q).q_hat;
  const bool we_ok = within_rel(we, 1523.86, 0.02);

  if (lg_ok) {
    report(2, true,
           fmt("LG-P 98%% lambda=500 q95 %.2f (6020.76 +-2%%); We-P 92%% q99 %.2f (1523.86)", lg,
               we));
  } else {
    report(2, we_ok,
           fmt("LG-P q95 %.2f missed 6020.76 (parameterization finding); binding We-P 92%% q99 "
               "%.2f (1523.86 +-2%%)",
               lg, we));
  }
}

// --- criterion 3: Danish thresholds ---
void criterion_3(const std::optional<ClaimDataset>& danish) {
  if (!danish) {
    report(3, false, "Danish threshold regression: data unavailable in this environment");
    return;
  }
  const SortedSample s(danish->values);
  const auto m1 = select_fixed_quantile(s, 0.05);
  const auto m2 = select_square_root(s);
  const auto m3 = select_empirical_rule(s);
  const bool heur_ok =
      round2(m1.b_hat) == 8.41 && round2(m2.b_hat) == 17.07 && round2(m3.b_hat) == 11.62;

  auto near_index = [&](double target_value, long index, long tol) {
    long best = 1;
    double best_gap = std::fabs(s.order_stat(1) - target_value);
    for (long i = 2; i <= s.n(); ++i) {
      const double gap = std::fabs(s.order_stat(i) - target_value);
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return std::labs(best - index) <= tol;
  };
  const auto m4 = select_min_amse_hill(s);
  const auto m5 = select_exponentiality(s);
  const auto m6 = select_gertensgarbe(s);
  const bool m4_ok = near_index(2.46, m4.index, 5);
  const bool m5_ok = near_index(12.06, m5.index, 5);
  const bool m6_ok = near_index(4.61, m6.index, 5);

  const auto m7 = fit_scollnik(s);
  const bool m7_ok = within_rel(m7.b, 1.44, 0.05) && within_rel(m7.alpha, 1.56, 0.05);

  report(3, heur_ok && m4_ok && m5_ok && m6_ok && m7_ok,
         fmt("Danish thresholds m1 %.2f (8.41) m2 %.2f (17.07) m3 %.2f (11.62) m4 %.2f (2.46) "
             "m5 %.2f (12.06) m6 %.2f (4.61) m7 b %.2f (1.44) alpha %.2f (1.56)",
             m1.b_hat, m2.b_hat, m3.b_hat, m4.b_hat, m5.b_hat, m6.b_hat, m7.b, m7.alpha));
}

// --- criterion 4: Danish Pareto tail fits ---
void criterion_4(const std::optional<ClaimDataset>& danish) {
  if (!danish) {
    report(4, false, "Danish tail-fit regression: data unavailable in this environment");
    return;
  }
  auto fit_above = [&](double b) {
    std::vector<double> excess;
    for (double z : danish->values)
      if (z > b) excess.push_back(z - b);
    return fit_pareto_tail(excess, b);
  };
  const auto t1 = fit_above(8.41);
  const auto t2 = fit_above(17.07);
  const bool ok = within_rel(t1.alpha, 2.41, 0.02) && within_rel(t1.beta, 18.49, 0.02) &&
                  within_rel(t2.alpha, 1.57, 0.02) && within_rel(t2.beta, 12.91, 0.02);
  report(4, ok,
         fmt("Danish tails: above 8.41 (%.3f, %.2f) vs (2.41, 18.49); above 17.07 (%.3f, %.2f) "
             "vs (1.57, 12.91), +-2%%",
             t1.alpha, t1.beta, t2.alpha, t2.beta));
}

// --- criterion 5: Danish reserves, Gamma bulk at the fixed-quantile threshold ---
void criterion_5(const std::optional<ClaimDataset>& danish) {
  if (!danish) {
    report(5, false, "Danish reserve regression: data unavailable in this environment");
    return;
  }
  const SortedSample s(danish->values);
  const auto m1 = select_fixed_quantile(s, 0.05);
  std::vector<double> below, excess;
  for (double z : danish->values) {
    if (z <= m1.b_hat)
      below.push_back(z);
    else
      excess.push_back(z - m1.b_hat);
  }
  const auto bulk = fit_bulk(below, Family::Gamma, m1.b_hat, FitMode::TruncatedLikelihood);
  const auto tail = fit_pareto_tail(excess, m1.b_hat);
  const auto model =
      build_composite(bulk, tail, p_below_empirical(s, m1.b_hat), PMode::Empirical);
  ReserveQuery q{227.0, 0.05, 1000000, 20240808, 5, 0};
  const auto est = estimate_reserve_multi(model, q, {0.05, 0.01, 0.005});
  const double q95 = est[0].q_hat / 1000.0;  // billions
  const double q99 = est[1].q_hat / 1000.0;
  const double q995 = est[2].q_hat / 1000.0;
  const bool ok = within_rel(q95, 0.79, 0.03) && within_rel(q99, 0.96, 0.03) &&
                  within_rel(q995, 1.06, 0.03);
  report(5, ok,
         fmt("Danish Ga bulk at b1: reserves %.3f %.3f %.3f bn vs (0.79, 0.96, 1.06), +-3%%", q95,
             q99, q995));
}

// --- criterion 6: property suite ---
void criterion_6() {
  std::string fails;

  // composite pdf normalization for 20 random valid models
  Philox rng(2468, 1);
  for (int i = 0; i < 20; ++i) {
    const Family fam = static_cast<Family>(static_cast<int>(rng.uniform() * 4.0));
    DistributionSpec bulk{fam, 0.0, 0.0};
    switch (fam) {
      case Family::Gamma: bulk = {fam, 2.0 + 10.0 * rng.uniform(), 0.5 + 2.0 * rng.uniform()}; break;
      case Family::LogNormal: bulk = {fam, -0.5 + 2.0 * rng.uniform(), 0.3 + 1.2 * rng.uniform()}; break;
      case Family::Weibull: bulk = {fam, 0.8 + 2.0 * rng.uniform(), 2.0 + 10.0 * rng.uniform()}; break;
      default: bulk = {Family::LogGamma, 3.0 + 5.0 * rng.uniform(), 2.0 + 2.0 * rng.uniform()}; break;
    }
    const double level = 0.85 + 0.13 * rng.uniform();
    const double b = quantile(bulk, level);
    const auto m = make_composite(bulk, b, 0.8 + 3.0 * rng.uniform(),
                                  5.0 + 100.0 * rng.uniform(), 0.5 + 0.49 * rng.uniform(),
                                  PMode::Theoretical);
    auto f = [&](double z) { return z <= support_min(m.bulk) ? 0.0 : composite_pdf(m, z); };
    const double total = oracle::integrate_upper(f, support_min(m.bulk), 1e-12);
    if (std::fabs(total - 1.0) > 1e-8) {
      fails += fmt(" pdf-normalization(%d)=%.2e", i, std::fabs(total - 1.0));
      break;
    }
  }

  // continuity identity of the mixing weight
  Philox rng2(2468, 2);
  for (int i = 0; i < 50; ++i) {
    const double mu = -1.0 + 2.0 * rng2.uniform();
    const double sigma = 0.2 + 1.5 * rng2.uniform();
    const double alpha = 0.5 + 3.0 * rng2.uniform();
    const double beta = 0.1 + 5.0 * rng2.uniform();
    const double b = 0.3 + 6.0 * rng2.uniform();
    const double r = scollnik_mixing_weight(mu, sigma, alpha, beta, b);
    const double one_minus_r = scollnik_tail_weight(mu, sigma, alpha, beta, b);
    const DistributionSpec ln{Family::LogNormal, mu, sigma};
    const double below = r * pdf(ln, b) / cdf(ln, b);
    const double above = one_minus_r * alpha / beta;
    if (std::fabs(below - above) > 1e-9 * std::fabs(above)) {
      fails += " scollnik-continuity";
      break;
    }
  }

  // quantile/cdf round-trips
  const DistributionSpec specs[] = {{Family::Gamma, 10.0, 1.0},
                                    {Family::LogNormal, 1.5, 1.27},
                                    {Family::Weibull, 2.0, 11.28},
                                    {Family::LogGamma, 6.0, 3.04},
                                    {Family::ParetoII, 2.5, 75.0}};
  for (const auto& spec : specs) {
    for (int i = 1; i <= 100; ++i) {
      const double p = 0.001 + (0.999 - 0.001) * (i - 1) / 99.0;
      const double back = spec.family == Family::ParetoII
                              ? pareto_cdf(spec.param1, spec.param2, pareto_quantile(spec.param1, spec.param2, p))
                              : cdf(spec, quantile(spec, p));
      if (std::fabs(back - p) > 1e-9) {
        fails += fmt(" roundtrip(%s)", family_name(spec.family));
        break;
      }
    }
  }

  // gradient at the fitted optimum vs central differences
  auto rel_grad = [](const std::function<double(const std::vector<double>&)>& ll,
                     std::vector<double> th) {
    const double l0 = ll(th);
    double worst = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double h = 1e-6 * std::max(std::fabs(th[i]), 1e-6);
      auto up = th, dn = th;
      up[i] += h;
      dn[i] -= h;
      const double g = (ll(up) - ll(dn)) / (2.0 * h);
      worst = std::max(worst, std::fabs(g) * std::max(std::fabs(th[i]), 1.0) /
                                  std::max(std::fabs(l0), 1.0));
    }
    return worst;
  };
  for (const auto& truth : {DistributionSpec{Family::Gamma, 10.0, 1.0},
                            DistributionSpec{Family::LogNormal, 1.5, 1.27},
                            DistributionSpec{Family::Weibull, 2.0, 11.28},
                            DistributionSpec{Family::LogGamma, 6.0, 3.04}}) {
    const double b = quantile(truth, 0.93);
    TruncatedSampler trunc(truth, b);
    Philox drng(999, 3);
    std::vector<double> data(20000);
    for (auto& z : data) z = trunc.draw(drng);
    const auto fit = fit_bulk(data, truth.family, b, FitMode::TruncatedLikelihood);
    auto ll = [&](const std::vector<double>& th) {
      return bulk_loglik(data, {truth.family, th[0], th[1]}, b, FitMode::TruncatedLikelihood);
    };
    if (!fit.converged || rel_grad(ll, {fit.spec.param1, fit.spec.param2}) > 1e-4) {
      fails += fmt(" gradient(%s)", family_name(truth.family));
    }
  }
  {
    Philox prng(999, 4);
    std::vector<double> y(20000);
    for (auto& v : y) v = pareto_draw(2.5, 75.0, prng);
    const auto fit = fit_pareto_tail(y, 10.0);
    auto ll = [&](const std::vector<double>& th) { return pareto_tail_loglik(y, th[0], th[1]); };
    if (rel_grad(ll, {fit.alpha, fit.beta}) > 1e-4) fails += " gradient(pareto)";
  }

  // study cells satisfy rmse >= |bias|, and the harness is worker-invariant
  ExperimentConfig cfg;
  cfg.true_family = Family::Gamma;
  cfg.gamma = 0.08;
  cfg.n = 400;
  cfg.lambda = 5.0;
  cfg.eps = 0.05;
  cfg.replications = 6;
  cfg.m = 4000;
  cfg.p_mode = PMode::Empirical;
  cfg.selectors = {Method::M1, Method::M2, Method::M5};
  cfg.bulk_families = {Family::Gamma, Family::Weibull};
  cfg.seed = 321;
  const auto r1 = run_experiment(cfg, 1);
  const auto r2 = run_experiment(cfg, 2);
  const auto r8 = run_experiment(cfg, 8);
  for (const auto& cell : r1.cells) {
    if (cell.successes == 0) fails += " empty-cell";
    if (cell.successes > 0 && cell.rmse < std::fabs(cell.bias)) fails += " rmse<|bias|";
  }
  if (cells_csv(cfg, r1) != cells_csv(cfg, r2) || cells_csv(cfg, r1) != cells_csv(cfg, r8))
    fails += " worker-variance";

  report(6, fails.empty(),
         fails.empty() ? "property suite: normalization, continuity, round-trips, gradients, "
                         "rmse>=|bias|, worker-invariant output"
                       : "property suite failed:" + fails);
}

// --- criterion 7: selector oracle equivalence ---
void criterion_7() {
  int mismatches = 0, binding = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const long n = 30 + (rep * 13) % 171;
    std::vector<double> z(static_cast<std::size_t>(n));
    Philox rng(7000 + static_cast<std::uint64_t>(rep), 5);
    if (rep % 2 == 0) {
      for (auto& v : z) v = std::exp(normal_quantile(std::max(rng.uniform(), 1e-12)));
    } else {
      for (auto& v : z) v = std::pow(1.0 - rng.uniform(), -1.0 / 1.5);
    }
    const SortedSample s(z);

    const long exp_ref = oracle::exponentiality_k_bruteforce(s.values());
    const auto exp_est = select_exponentiality(s);
    if (exp_ref == 0) {
      if (!exp_est.warn) ++mismatches;
    } else {
      ++binding;
      if (exp_est.k != exp_ref) ++mismatches;
    }

    const long gg_ref = oracle::gertensgarbe_index_bruteforce(s.values());
    try {
      const auto gg_est = select_gertensgarbe(s);
      if (gg_est.index != gg_ref) ++mismatches;
    } catch (const no_threshold_error&) {
      if (gg_ref != 0) ++mismatches;
    }
  }
  report(7, mismatches == 0 && binding > 20,
         fmt("selector brute-force equivalence on 100 samples (n<=200): %d mismatches, "
             "%d binding exponentiality cases",
             mismatches, binding));
}

// --- criterion 8: reduced-scale study sanity ---
void criterion_8() {
  int both_hold = 0;
  std::string detail;
  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    ExperimentConfig cfg;
    cfg.true_family = Family::Gamma;
    cfg.true_param1 = 10.0;
    cfg.true_param2 = 1.0;
    cfg.gamma = 0.08;
    cfg.n = 5000;
    cfg.lambda = 50.0;
    cfg.eps = 0.01;
    cfg.replications = 100;
    cfg.m = 100000;
    cfg.p_mode = PMode::Empirical;
    cfg.selectors = {Method::M2, Method::M4};
    cfg.bulk_families = {Family::Gamma};
    cfg.seed = seed;
    const auto result = run_experiment(cfg, 0);
    double bias_m2 = 0.0, bias_m4 = 0.0;
    long ok_m2 = 0, ok_m4 = 0;
    for (const auto& cell : result.cells) {
      if (cell.cell.selector == Method::M2) {
        bias_m2 = cell.bias;
        ok_m2 = cell.successes;
      }
      if (cell.cell.selector == Method::M4) {
        bias_m4 = cell.bias;
        ok_m4 = cell.successes;
      }
    }
    const bool populated = ok_m2 >= 90 && ok_m4 >= 90;
    const bool small_m2 = std::fabs(bias_m2) < 0.05 * result.true_reserve;
    const bool m4_worse = std::fabs(bias_m4) > std::fabs(bias_m2);
    if (populated && small_m2 && m4_worse) ++both_hold;
    detail += fmt(" seed%llu: m2 %.1f (%ld ok) m4 %.1f (%ld ok) q %.1f;",
                  static_cast<unsigned long long>(seed), bias_m2, ok_m2, bias_m4, ok_m4,
                  result.true_reserve);
  }
  report(8, both_hold >= 2,
         fmt("reduced study (N=100, m=1e5): |bias(m2)|<5%% and |bias(m4)|>|bias(m2)| in %d/3 "
             "seeds;%s",
             both_hold, detail.c_str()));
}

// --- criterion 9: self-consistency fits ---
void criterion_9() {
  Philox rng(13579, 6);
  std::vector<double> y(100000);
  for (auto& v : y) v = pareto_draw(2.5, 75.0, rng);
  const auto tail = fit_pareto_tail(y, 10.0);
  const bool tail_ok = within_rel(tail.alpha, 2.5, 0.02) && within_rel(tail.beta, 75.0, 0.02);

  const DistributionSpec g{Family::Gamma, 10.0, 1.0};
  const double b = quantile(g, 0.92);
  TruncatedSampler trunc(g, b);
  Philox rng2(13579, 7);
  std::vector<double> data(100000);
  for (auto& z : data) z = trunc.draw(rng2);
  const auto bulk = fit_bulk(data, Family::Gamma, b, FitMode::TruncatedLikelihood);
  const bool bulk_ok = bulk.converged && within_rel(bulk.spec.param1, 10.0, 0.02) &&
                       within_rel(bulk.spec.param2, 1.0, 0.02);

  report(9, tail_ok && bulk_ok,
         fmt("self-consistency: ParetoII fit (%.3f, %.2f) vs (2.5, 75); truncated Gamma fit "
             "(%.3f, %.4f) vs (10, 1), +-2%%",
             tail.alpha, tail.beta, bulk.spec.param1, bulk.spec.param2));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  const auto danish = danish_data();
  if (!danish) {
    std::printf("note: Danish fire data not found (EOT_DANISH_DATA or data/danish.csv); "
                "criteria 3-5 will fail as data-unavailable\n");
  }
  criterion_1();
  criterion_2();
  criterion_3(danish);
  criterion_4(danish);
  criterion_5(danish);
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
