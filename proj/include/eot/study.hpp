#pragma once

// Simulation-study harness: repeatedly draw claim samples from a known
// composite model, run the threshold selectors and bulk/tail fits, estimate
// reserves, and summarise bias and RMSE per (selector, bulk family) cell
// against the true reserve.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "eot/composite.hpp"
#include "eot/fitting.hpp"
#include "eot/kv_record.hpp"
#include "eot/reserve.hpp"
#include "eot/tailselect.hpp"

namespace eot {

struct ExperimentConfig {
  Family true_family = Family::Gamma;
  double true_param1 = 10.0;
  double true_param2 = 1.0;
  double true_tail_alpha = 2.5;  // Pareto excess shape of the true model
  double true_tail_beta = 75.0;  // Pareto excess scale of the true model
  double gamma = 0.08;  // tail fraction above the true threshold
  long n = 5000;
  double lambda = 50.0;
  double eps = 0.01;
  long replications = 100;
  long m = 100000;  // simulations per reserve estimate
  PMode p_mode = PMode::Empirical;
  std::vector<Method> selectors = {Method::M1, Method::M2, Method::M3,
                                   Method::M4, Method::M5, Method::M6};
  std::vector<Family> bulk_families = {Family::Gamma, Family::LogNormal, Family::Weibull,
                                       Family::LogGamma};
  std::uint64_t seed = 1;
  long true_reserve_sims = 1000000;  // floor 1e6 enforced at run time
};

struct StudyCell {
  Method selector;
  Family bulk;       // LogNormal for the simultaneous fit
  bool scollnik = false;
};

struct CellSummary {
  StudyCell cell;
  double bias = 0.0;
  double rmse = 0.0;
  double mean_b_hat = 0.0;
  long successes = 0;
  long failures = 0;
};

struct ExperimentResult {
  std::string config_digest;
  double true_reserve = 0.0;
  std::vector<CellSummary> cells;
};

struct ReplicationResult {
  // one entry per cell, empty on selector/fit failure
  std::vector<std::optional<double>> reserves;
  std::vector<std::optional<double>> b_hats;
};

inline std::vector<StudyCell> study_cells(const ExperimentConfig& cfg) {
  std::vector<StudyCell> cells;
  for (Family fam : cfg.bulk_families) {
    for (Method m : cfg.selectors) {
      if (m == Method::M7) continue;
      cells.push_back({m, fam, false});
    }
  }
  for (Method m : cfg.selectors) {
    if (m == Method::M7) cells.push_back({Method::M7, Family::LogNormal, true});
  }
  return cells;
}

inline KvRecord experiment_to_record(const ExperimentConfig& cfg) {
  KvRecord rec;
  rec.set_i64("schema", 1);
  rec.set("kind", "experiment_config");
  rec.set("true.family", family_name(cfg.true_family));
  rec.set_f64("true.param1", cfg.true_param1);
  rec.set_f64("true.param2", cfg.true_param2);
  rec.set_f64("true.tail_alpha", cfg.true_tail_alpha);
  rec.set_f64("true.tail_beta", cfg.true_tail_beta);
  rec.set_f64("gamma", cfg.gamma);
  rec.set_i64("n", cfg.n);
  rec.set_f64("lambda", cfg.lambda);
  rec.set_f64("eps", cfg.eps);
  rec.set_i64("replications", cfg.replications);
  rec.set_i64("sims", cfg.m);
  rec.set("p_mode", p_mode_name(cfg.p_mode));
  std::string sel, fams;
  for (Method m : cfg.selectors) {
    if (!sel.empty()) sel += ',';
    sel += method_name(m);
  }
  for (Family f : cfg.bulk_families) {
    if (!fams.empty()) fams += ',';
    fams += family_name(f);
  }
  rec.set("selectors", sel);
  rec.set("bulk_families", fams);
  rec.set_u64("seed", cfg.seed);
  rec.set_i64("true_reserve_sims", cfg.true_reserve_sims);
  return rec;
}

inline ExperimentConfig experiment_from_record(const KvRecord& rec) {
  if (rec.i64("schema") != 1) throw data_error("experiment config: unsupported schema");
  ExperimentConfig cfg;
  cfg.true_family = parse_family(rec.str("true.family"));
  cfg.true_param1 = rec.f64("true.param1");
  cfg.true_param2 = rec.f64("true.param2");
  cfg.true_tail_alpha = rec.f64_or("true.tail_alpha", 2.5);
  cfg.true_tail_beta = rec.f64_or("true.tail_beta", 75.0);
  cfg.gamma = rec.f64("gamma");
  cfg.n = rec.i64("n");
  cfg.lambda = rec.f64("lambda");
  cfg.eps = rec.f64("eps");
  cfg.replications = rec.i64("replications");
  cfg.m = rec.i64("sims");
  cfg.p_mode = parse_p_mode(rec.str("p_mode"));
  cfg.selectors.clear();
  std::stringstream sel(rec.str("selectors"));
  std::string token;
  while (std::getline(sel, token, ',')) cfg.selectors.push_back(parse_method(token));
  cfg.bulk_families.clear();
  std::stringstream fams(rec.str("bulk_families"));
  while (std::getline(fams, token, ',')) cfg.bulk_families.push_back(parse_family(token));
  cfg.seed = rec.u64("seed");
  cfg.true_reserve_sims = rec.i64_or("true_reserve_sims", 1000000);
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw data_error("experiment config: gamma outside (0,1)");
  if (cfg.n < 10 || cfg.replications < 1) throw data_error("experiment config: bad sizes");
  return cfg;
}

inline std::string experiment_digest(const ExperimentConfig& cfg) {
  return text_digest(experiment_to_record(cfg).to_string());
}

inline CompositeModel true_composite(const ExperimentConfig& cfg) {
  const DistributionSpec bulk{cfg.true_family, cfg.true_param1, cfg.true_param2};
  const double b_true = quantile(bulk, 1.0 - cfg.gamma);
  return make_composite(bulk, b_true, cfg.true_tail_alpha, cfg.true_tail_beta, 1.0 - cfg.gamma,
                        PMode::Theoretical);
}

// Reserve of the true composite model on a reserved seed stream, m >= 1e6.
inline double true_reserve(const ExperimentConfig& cfg) {
  ReserveQuery q;
  q.lambda = cfg.lambda;
  q.eps = cfg.eps;
  q.m = std::max<long>(cfg.true_reserve_sims, 1000000);
  q.seed = cfg.seed;
  q.stream = derive_stream(0x7452657365727665ull, 0);  // reserved stream
  q.workers = 0;
  return estimate_reserve(true_composite(cfg), q).q_hat;
}

namespace detail {

inline std::uint64_t replication_stream(std::uint64_t tag, long a, long b = 0) {
  return derive_stream(derive_stream(tag, static_cast<std::uint64_t>(a)),
                       static_cast<std::uint64_t>(b));
}

inline constexpr std::uint64_t kTagSample = 0x53414d504c45ull;  // sample draws
inline constexpr std::uint64_t kTagCell = 0x43454c4cull;        // per-cell reserves

// small-sample clamp: keeps tiny samples from producing all-bulk or
// all-tail sampling models
inline double clamp_p_for_sampling(double p, long n) {
  const double lo = 1.0 / static_cast<double>(n + 1);
  const double hi = static_cast<double>(n) / static_cast<double>(n + 1);
  return std::clamp(p, lo, hi);
}

}  // namespace detail

inline ReplicationResult run_replication(const ExperimentConfig& cfg, long replicate_index) {
  const auto cells = study_cells(cfg);
  ReplicationResult rep;
  rep.reserves.resize(cells.size());
  rep.b_hats.resize(cells.size());

  const CompositeModel truth = true_composite(cfg);
  const CompositeSampler sampler(truth);
  Philox rng(cfg.seed, detail::replication_stream(detail::kTagSample, replicate_index));
  std::vector<double> draws(static_cast<std::size_t>(cfg.n));
  for (auto& z : draws) z = sampler.draw(rng);
  const SortedSample s(std::move(draws));

  // selectors once per replication, shared across bulk families
  std::vector<std::optional<ThresholdEstimate>> selected(7);
  for (Method m : cfg.selectors) {
    if (m == Method::M7) continue;
    try {
      selected[static_cast<std::size_t>(m)] = select_threshold(m, s);
    } catch (const std::exception&) {
      // cell stays empty
    }
  }

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& cell = cells[ci];
    try {
      CompositeModel model{};
      double b_hat = 0.0;
      if (cell.scollnik) {
        const auto fit = fit_scollnik(s);
        if (!fit.converged) continue;
        model = to_composite(fit);
        b_hat = fit.b;
      } else {
        const auto& est = selected[static_cast<std::size_t>(cell.selector)];
        if (!est) continue;
        b_hat = est->b_hat;
        std::vector<double> below, excess;
        for (double z : s.values()) {
          if (z <= b_hat)
            below.push_back(z);
          else
            excess.push_back(z - b_hat);
        }
        const auto bulk = fit_bulk(below, cell.bulk, b_hat, FitMode::TruncatedLikelihood);
        if (!bulk.converged) continue;
        const auto tail = fit_pareto_tail(excess, b_hat);
        const double p_raw = cfg.p_mode == PMode::Empirical ? p_below_empirical(s, b_hat)
                                                            : p_below_theoretical(bulk, b_hat);
        const double p = detail::clamp_p_for_sampling(p_raw, cfg.n);
        model = build_composite(bulk, tail, p, cfg.p_mode);
      }
      ReserveQuery q;
      q.lambda = cfg.lambda;
      q.eps = cfg.eps;
      q.m = cfg.m;
      q.seed = cfg.seed;
      q.stream = detail::replication_stream(detail::kTagCell, replicate_index,
                                            static_cast<long>(ci));
      q.workers = 1;
      rep.reserves[ci] = estimate_reserve(model, q).q_hat;
      rep.b_hats[ci] = b_hat;
    } catch (const std::exception&) {
      // failure voids only this cell for this replication
    }
  }
  return rep;
}

inline ExperimentResult summarize(const ExperimentConfig& cfg,
                                  const std::vector<ReplicationResult>& reps,
                                  double true_reserve_value) {
  const auto cells = study_cells(cfg);
  ExperimentResult result;
  result.config_digest = experiment_digest(cfg);
  result.true_reserve = true_reserve_value;
  result.cells.resize(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    auto& summary = result.cells[ci];
    summary.cell = cells[ci];
    double sum_d = 0.0, sum_b = 0.0;
    long ok = 0;
    for (const auto& rep : reps) {
      if (rep.reserves[ci]) {
        sum_d += *rep.reserves[ci] - true_reserve_value;
        sum_b += *rep.b_hats[ci];
        ++ok;
      }
    }
    summary.successes = ok;
    summary.failures = static_cast<long>(reps.size()) - ok;
    if (ok == 0) continue;  // cell marked absent via successes == 0
    const double bias = sum_d / static_cast<double>(ok);
    double var = 0.0;
    for (const auto& rep : reps) {
      if (rep.reserves[ci]) {
        const double d = *rep.reserves[ci] - true_reserve_value - bias;
        var += d * d;
      }
    }
    var /= static_cast<double>(ok);
    summary.bias = bias;
    // sqrt(bias^2 + centred second moment) = root mean squared error, and
    // cannot dip below |bias| in floating point
    summary.rmse = std::sqrt(bias * bias + var);
    summary.mean_b_hat = sum_b / static_cast<double>(ok);
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 0) {
  const double q_true = true_reserve(cfg);
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(cfg.replications));
  const int w = std::min<long>(resolve_workers(workers), cfg.replications);
  if (w <= 1) {
    for (long r = 0; r < cfg.replications; ++r) reps[static_cast<std::size_t>(r)] = run_replication(cfg, r);
  } else {
    std::atomic<long> next{0};
    auto worker = [&]() {
      for (;;) {
        const long r = next.fetch_add(1);
        if (r >= cfg.replications) return;
        reps[static_cast<std::size_t>(r)] = run_replication(cfg, r);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return summarize(cfg, reps, q_true);
}

// one row per cell: digest, selector, bulk, p_mode, bias, rmse, failures
inline std::string cells_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::string out = "digest,selector,bulk,p_mode,bias,rmse,failures,mean_b_hat,true_reserve\n";
  char buf[256];
  for (const auto& c : result.cells) {
    if (c.successes == 0) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,,,%ld,,%.12g\n", result.config_digest.c_str(),
                    method_name(c.cell.selector), family_name(c.cell.bulk),
                    c.cell.scollnik ? "model" : p_mode_name(cfg.p_mode), c.failures,
                    result.true_reserve);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%.12g,%.12g,%ld,%.12g,%.12g\n",
                    result.config_digest.c_str(), method_name(c.cell.selector),
                    family_name(c.cell.bulk), c.cell.scollnik ? "model" : p_mode_name(cfg.p_mode),
                    c.bias, c.rmse, c.failures, c.mean_b_hat, result.true_reserve);
    }
    out += buf;
  }
  return out;
}

// aligned text: bulk families as rows, selectors as columns, bias entries
inline std::string bias_table(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::ostringstream out;
  char buf[64];
  out << "bias of reserve estimates, config " << result.config_digest << "\n";
  std::snprintf(buf, sizeof(buf), "true reserve %.2f\n", result.true_reserve);
  out << buf;
  out << "bulk      ";
  for (Method m : cfg.selectors) {
    if (m == Method::M7) continue;
    std::snprintf(buf, sizeof(buf), "%12s", method_name(m));
    out << buf;
  }
  out << "\n";
  for (Family fam : cfg.bulk_families) {
    std::snprintf(buf, sizeof(buf), "%-10s", family_name(fam));
    out << buf;
    for (const auto& c : result.cells) {
      if (c.cell.scollnik || c.cell.bulk != fam) continue;
      if (c.successes == 0) {
        std::snprintf(buf, sizeof(buf), "%12s", "-");
      } else {
        std::snprintf(buf, sizeof(buf), "%12.2f", c.bias);
      }
      out << buf;
    }
    out << "\n";
  }
  for (const auto& c : result.cells) {
    if (!c.cell.scollnik) continue;
    if (c.successes == 0) {
      out << "lognormal* (simultaneous)            -\n";
    } else {
      std::snprintf(buf, sizeof(buf), "lognormal* (simultaneous) %12.2f\n", c.bias);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace eot
