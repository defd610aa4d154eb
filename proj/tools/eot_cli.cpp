// Command-line front end: threshold selection, composite-model fitting,
// reserve estimation, the simulation-study harness, and the Danish fire
// claim demonstration.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eot/claims_io.hpp"
#include "eot/composite.hpp"
#include "eot/fitting.hpp"
#include "eot/kv_record.hpp"
#include "eot/reserve.hpp"
#include "eot/study.hpp"
#include "eot/tailselect.hpp"

namespace {

using namespace eot;

std::string dataset_digest(const ClaimDataset& ds) {
  std::string bytes(ds.values.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), ds.values.data(), bytes.size());
  return text_digest(bytes);
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed, std::ostream& out) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  out << "# seed derived from entropy\nseed = " << s << "\n";
  return s;
}

void emit(const std::string& report, const std::string& out_path) {
  std::cout << report;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw data_error("cannot write " + out_path);
    out << report;
  }
}

char parse_delimiter(const std::string& s) {
  if (s.empty() || s == "auto") return 0;
  if (s == "comma") return ',';
  if (s == "space" || s == "whitespace") return ' ';
  throw CLI::ValidationError("--delimiter", "expected auto, comma or space");
}

std::vector<Method> parse_methods(const std::string& s) {
  if (s == "all")
    return {Method::M1, Method::M2, Method::M3, Method::M4, Method::M5, Method::M6, Method::M7};
  std::vector<Method> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_method(tok));
  if (out.empty()) throw std::invalid_argument("no methods requested");
  return out;
}

std::vector<Family> parse_bulks(const std::string& s) {
  if (s == "all") return {Family::Gamma, Family::LogNormal, Family::Weibull, Family::LogGamma};
  std::vector<Family> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_family(tok));
  if (out.empty()) throw std::invalid_argument("no bulk families requested");
  return out;
}

struct SelectedThreshold {
  std::string method;
  long k = 0;
  long index = 0;
  double b_hat = 0.0;
  bool warn = false;
  std::optional<ScollnikFit> simultaneous;
  std::string error;
};

SelectedThreshold run_selector(Method m, const SortedSample& s) {
  SelectedThreshold out;
  out.method = method_name(m);
  try {
    if (m == Method::M7) {
      const auto fit = fit_scollnik(s);
      const auto& v = s.values();
      const long below =
          static_cast<long>(std::upper_bound(v.begin(), v.end(), fit.b) - v.begin());
      out.k = s.n() - below;
      out.index = below;
      out.b_hat = fit.b;
      out.warn = !fit.converged;
      out.simultaneous = fit;
    } else {
      const auto est = select_threshold(m, s);
      out.k = est.k;
      out.index = est.index;
      out.b_hat = est.b_hat;
      out.warn = est.warn;
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

int cmd_select(const std::string& input, int column, char delim, const std::string& methods,
               const std::string& out_path) {
  const auto ds = load_claims(input, column, delim);
  const SortedSample s(ds.values);
  const std::string digest = dataset_digest(ds);

  std::ostringstream rep;
  rep << "# thresholds for " << input << "\n";
  rep << "dataset.n = " << ds.n << "\ndataset.digest = " << digest << "\n";
  rep << "method,k,index,b_hat,warn,digest\n";
  int ok = 0, requested = 0;
  char buf[256];
  for (Method m : parse_methods(methods)) {
    ++requested;
    const auto sel = run_selector(m, s);
    if (!sel.error.empty()) {
      rep << sel.method << ",,,,error: " << sel.error << "," << digest << "\n";
      continue;
    }
    ++ok;
    std::snprintf(buf, sizeof(buf), "%s,%ld,%ld,%.12g,%d,%s\n", sel.method.c_str(), sel.k,
                  sel.index, sel.b_hat, sel.warn ? 1 : 0, digest.c_str());
    rep << buf;
    if (sel.simultaneous) {
      std::snprintf(buf, sizeof(buf),
                    "m7.detail,mu = %.12g,sigma = %.12g,alpha = %.12g,beta = %.12g,r = %.12g\n",
                    sel.simultaneous->mu, sel.simultaneous->sigma, sel.simultaneous->alpha,
                    sel.simultaneous->beta, sel.simultaneous->r);
      rep << buf;
    }
  }
  emit(rep.str(), out_path);
  if (ok == 0) throw numerical_error("no threshold selector succeeded");
  (void)requested;
  return 0;
}

// threshold selection + bulk/tail fits for one method
struct FittedModels {
  SelectedThreshold threshold;
  std::vector<std::pair<Family, std::string>> failures;
  std::vector<std::pair<Family, CompositeModel>> models;
  std::vector<std::pair<Family, BulkFit>> bulks;
  std::optional<TailFit> tail;
};

FittedModels fit_models(const SortedSample& s, Method method, const std::vector<Family>& bulks,
                        FitMode fit_mode, PMode p_mode) {
  FittedModels out;
  out.threshold = run_selector(method, s);
  if (!out.threshold.error.empty()) return out;

  if (method == Method::M7) {
    out.models.emplace_back(Family::LogNormal, to_composite(*out.threshold.simultaneous));
    return out;
  }

  const double b_hat = out.threshold.b_hat;
  std::vector<double> below, excess;
  for (double z : s.values()) {
    if (z <= b_hat)
      below.push_back(z);
    else
      excess.push_back(z - b_hat);
  }
  const auto tail = fit_pareto_tail(excess, b_hat);
  out.tail = tail;
  for (Family fam : bulks) {
    try {
      const auto bulk = fit_bulk(below, fam, b_hat, fit_mode);
      if (!bulk.converged) {
        out.failures.emplace_back(fam, "bulk fit did not converge");
        continue;
      }
      const double p = p_mode == PMode::Empirical ? p_below_empirical(s, b_hat)
                                                  : p_below_theoretical(bulk, b_hat);
      out.bulks.emplace_back(fam, bulk);
      out.models.emplace_back(fam, build_composite(bulk, tail, p, p_mode));
    } catch (const std::exception& e) {
      out.failures.emplace_back(fam, e.what());
    }
  }
  return out;
}

int cmd_fit(const std::string& input, int column, char delim, const std::string& method_str,
            const std::string& bulk_str, const std::string& p_mode_str,
            const std::string& fit_mode_str, const std::string& out_path) {
  const auto ds = load_claims(input, column, delim);
  const SortedSample s(ds.values);
  const std::string digest = dataset_digest(ds);
  const Method method = parse_method(method_str);
  const auto bulks = parse_bulks(bulk_str);
  const PMode p_mode = parse_p_mode(p_mode_str);
  const FitMode fit_mode =
      fit_mode_str == "plain" ? FitMode::PlainLikelihood : FitMode::TruncatedLikelihood;
  if (!out_path.empty() && method != Method::M7 && bulks.size() != 1)
    throw std::invalid_argument("--out requires a single --bulk family");

  const auto fitted = fit_models(s, method, bulks, fit_mode, p_mode);
  if (!fitted.threshold.error.empty())
    throw numerical_error(method_str + ": " + fitted.threshold.error);

  std::ostringstream rep;
  rep << "# fits for " << input << ", method " << method_str << "\n";
  rep << "dataset.n = " << ds.n << "\ndataset.digest = " << digest << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "threshold = %.12g\n", fitted.threshold.b_hat);
  rep << buf;

  std::string model_text;
  if (method == Method::M7) {
    const auto& fit = *fitted.threshold.simultaneous;
    KvRecord rec;
    rec.set("kind", "scollnik_fit");
    rec.set_f64("mu", fit.mu);
    rec.set_f64("sigma", fit.sigma);
    rec.set_f64("alpha", fit.alpha);
    rec.set_f64("beta", fit.beta);
    rec.set_f64("threshold", fit.b);
    rec.set_f64("r", fit.r);
    rec.set_f64("loglik", fit.loglik);
    rec.set_i64("converged", fit.converged ? 1 : 0);
    rec.set("dataset.digest", digest);
    rep << rec.to_string();
    model_text = serialize_composite(fitted.models.front().second);
    rep << "\n" << model_text;
  } else {
    const auto& tail = *fitted.tail;
    KvRecord trec;
    trec.set("kind", "tail_fit");
    trec.set_f64("alpha", tail.alpha);
    trec.set_f64("beta", tail.beta);
    trec.set_f64("threshold", tail.b);
    trec.set_i64("n_exceed", tail.n_exceed);
    trec.set_f64("loglik", tail.loglik);
    trec.set_i64("boundary", tail.boundary ? 1 : 0);
    trec.set("dataset.digest", digest);
    rep << trec.to_string() << "\n";
    for (const auto& [fam, bulk] : fitted.bulks) {
      KvRecord rec;
      rec.set("kind", "bulk_fit");
      rec.set("family", family_name(fam));
      rec.set_f64("param1", bulk.spec.param1);
      rec.set_f64("param2", bulk.spec.param2);
      rec.set_f64("threshold", bulk.b);
      rec.set("fit_mode", fit_mode_name(bulk.mode));
      rec.set_f64("loglik", bulk.loglik);
      rec.set_i64("converged", 1);
      rec.set("dataset.digest", digest);
      rep << rec.to_string() << "\n";
    }
    for (const auto& [fam, model] : fitted.models) {
      const std::string text = serialize_composite(model);
      rep << "model.digest = " << model_digest(model) << "\n" << text << "\n";
      if (bulks.size() == 1) model_text = text;
    }
    for (const auto& [fam, why] : fitted.failures)
      rep << "failure." << family_name(fam) << " = " << why << "\n";
    if (fitted.models.empty()) {
      emit(rep.str(), "");
      throw numerical_error("all bulk fits failed");
    }
  }
  std::cout << rep.str();
  if (!out_path.empty()) {
    std::ofstream outf(out_path);
    if (!outf) throw data_error("cannot write " + out_path);
    outf << model_text;
  }
  return 0;
}

int cmd_reserve(const std::string& input, int column, char delim, const std::string& model_path,
                const std::string& method_str, const std::string& bulk_str,
                const std::string& p_mode_str, const std::string& fit_mode_str, double lambda,
                double eps, long sims, std::optional<std::uint64_t> seed_opt, int workers,
                const std::string& out_path) {
  std::ostringstream rep;
  CompositeModel model;
  if (!model_path.empty()) {
    std::ifstream in(model_path);
    if (!in) throw data_error("cannot open model file " + model_path);
    model = composite_from_record(KvRecord::parse(in));
  } else {
    if (input.empty()) throw std::invalid_argument("reserve needs --input or --model");
    const auto ds = load_claims(input, column, delim);
    const SortedSample s(ds.values);
    const auto bulks = parse_bulks(bulk_str);
    if (parse_method(method_str) != Method::M7 && bulks.size() != 1)
      throw std::invalid_argument("reserve needs a single --bulk family");
    const FitMode fit_mode =
        fit_mode_str == "plain" ? FitMode::PlainLikelihood : FitMode::TruncatedLikelihood;
    const auto fitted =
        fit_models(s, parse_method(method_str), bulks, fit_mode, parse_p_mode(p_mode_str));
    if (!fitted.threshold.error.empty())
      throw numerical_error(method_str + ": " + fitted.threshold.error);
    if (fitted.models.empty()) throw numerical_error("bulk fit failed");
    model = fitted.models.front().second;
    rep << "dataset.digest = " << dataset_digest(ds) << "\n";
  }

  const std::uint64_t seed = resolve_seed(seed_opt, rep);
  ReserveQuery query;
  query.lambda = lambda;
  query.eps = eps;
  query.m = sims;
  query.seed = seed;
  query.workers = workers;
  const auto est = estimate_reserve(model, query);

  KvRecord rec;
  rec.set("kind", "reserve_estimate");
  rec.set("model.digest", est.model_digest);
  rec.set_f64("lambda", lambda);
  rec.set_f64("eps", eps);
  rec.set_i64("sims", sims);
  rec.set_u64("seed", seed);
  rec.set_f64("q_hat", est.q_hat);
  rep << rec.to_string();
  emit(rep.str(), out_path);
  return 0;
}

int cmd_study(const std::string& config_path, std::optional<std::uint64_t> seed_opt, int workers,
              const std::string& out_prefix) {
  std::ifstream in(config_path);
  if (!in) throw data_error("cannot open config " + config_path);
  auto cfg = experiment_from_record(KvRecord::parse(in));
  if (seed_opt) cfg.seed = *seed_opt;

  const auto result = run_experiment(cfg, workers);
  const auto csv = cells_csv(cfg, result);
  const auto table = bias_table(cfg, result);
  std::cout << table << "\n" << csv;
  if (!out_prefix.empty()) {
    std::ofstream cells_out(out_prefix + ".cells.csv");
    std::ofstream table_out(out_prefix + ".table.txt");
    if (!cells_out || !table_out) throw data_error("cannot write outputs at prefix " + out_prefix);
    cells_out << csv;
    table_out << table;
  }
  return 0;
}

int cmd_danish(const std::string& input, int column, char delim, double lambda, long sims,
               std::optional<std::uint64_t> seed_opt, int workers, const std::string& p_mode_str,
               const std::string& out_path) {
  const auto ds = load_claims(input, column, delim);
  const SortedSample s(ds.values);
  const std::string digest = dataset_digest(ds);
  const PMode p_mode = parse_p_mode(p_mode_str);

  std::ostringstream rep;
  const std::uint64_t seed = resolve_seed(seed_opt, rep);
  char buf[512];

  double mean = 0.0, var = 0.0;
  for (double z : ds.values) mean += z;
  mean /= static_cast<double>(ds.n);
  for (double z : ds.values) var += (z - mean) * (z - mean);
  var /= static_cast<double>(ds.n - 1);
  rep << "# fire claim analysis for " << input << "\n";
  rep << "dataset.n = " << ds.n << "\ndataset.digest = " << digest << "\n";
  std::snprintf(buf, sizeof(buf),
                "dataset.min = %.2f\ndataset.max = %.2f\ndataset.mean = %.2f\ndataset.sd = %.2f\n",
                s.min(), s.max(), mean, std::sqrt(var));
  rep << buf;
  std::snprintf(buf, sizeof(buf), "lambda = %.12g\nsims = %ld\nseed = %llu\np_mode = %s\n", lambda,
                sims, static_cast<unsigned long long>(seed), p_mode_name(p_mode));
  rep << buf;

  const std::vector<Method> methods = {Method::M1, Method::M2, Method::M3, Method::M4,
                                       Method::M5, Method::M6, Method::M7};
  const std::vector<Family> families = {Family::Gamma, Family::LogNormal, Family::Weibull,
                                        Family::LogGamma};
  const std::vector<double> eps_levels = {0.05, 0.01, 0.005};

  rep << "\n== thresholds ==\nmethod,k,index,b_hat,warn,digest\n";
  std::vector<SelectedThreshold> thresholds;
  for (Method m : methods) {
    const auto sel = run_selector(m, s);
    thresholds.push_back(sel);
    if (!sel.error.empty()) {
      rep << sel.method << ",,,,error: " << sel.error << "," << digest << "\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%ld,%ld,%.2f,%d,%s\n", sel.method.c_str(), sel.k,
                    sel.index, sel.b_hat, sel.warn ? 1 : 0, digest.c_str());
      rep << buf;
    }
  }

  rep << "\n== parameter estimates ==\n";
  rep << "method,b_hat,tail.alpha,tail.beta";
  for (Family fam : families) rep << "," << family_name(fam) << ".param1,"
                                  << family_name(fam) << ".param2";
  rep << ",digest\n";

  struct Row {
    Method method;
    std::vector<std::pair<Family, CompositeModel>> models;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto& sel = thresholds[i];
    if (!sel.error.empty()) continue;
    if (methods[i] == Method::M7) {
      const auto& fit = *sel.simultaneous;
      std::snprintf(buf, sizeof(buf), "m7,%.2f,%.2f,%.2f", fit.b, fit.alpha, fit.beta);
      rep << buf;
      for (Family fam : families) {
        if (fam == Family::LogNormal) {
          std::snprintf(buf, sizeof(buf), ",%.2f,%.2f", fit.mu, fit.sigma);
          rep << buf;
        } else {
          rep << ",-,-";
        }
      }
      rep << "," << digest << "\n";
      rows.push_back({Method::M7, {{Family::LogNormal, to_composite(fit)}}});
      continue;
    }
    const auto fitted = fit_models(s, methods[i], families, FitMode::TruncatedLikelihood, p_mode);
    std::snprintf(buf, sizeof(buf), "%s,%.2f,%.2f,%.2f", sel.method.c_str(), sel.b_hat,
                  fitted.tail->alpha, fitted.tail->beta);
    rep << buf;
    for (Family fam : families) {
      bool found = false;
      for (const auto& [f, bulk] : fitted.bulks) {
        if (f == fam) {
          std::snprintf(buf, sizeof(buf), ",%.2f,%.2f", bulk.spec.param1, bulk.spec.param2);
          rep << buf;
          found = true;
        }
      }
      if (!found) rep << ",-,-";
    }
    rep << "," << digest << "\n";
    rows.push_back({methods[i], fitted.models});
  }

  rep << "\n== reserves (billions, per eps level) ==\n";
  rep << "method,bulk,model.digest";
  for (double eps : eps_levels) {
    std::snprintf(buf, sizeof(buf), ",q%.3g", 1.0 - eps);
    rep << buf;
  }
  rep << "\n";
  for (const auto& row : rows) {
    for (const auto& [fam, model] : row.models) {
      ReserveQuery q;
      q.lambda = lambda;
      q.m = sims;
      q.eps = eps_levels.front();
      q.seed = seed;
      q.stream = derive_stream(0x44414e495348ull, static_cast<std::uint64_t>(row.method) * 8 +
                                                      static_cast<std::uint64_t>(fam));
      q.workers = workers;
      const auto est = estimate_reserve_multi(model, q, eps_levels);
      rep << method_name(row.method) << "," << family_name(fam) << (row.method == Method::M7 ? "*" : "")
          << "," << est.front().model_digest;
      for (const auto& e : est) {
        std::snprintf(buf, sizeof(buf), ",%.2f", e.q_hat / 1000.0);
        rep << buf;
      }
      rep << "\n";
    }
  }
  emit(rep.str(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composite claim models: threshold selection, fitting, reserves"};
  app.require_subcommand(1);

  std::string input, model_path, config_path, out_path, delimiter = "auto";
  std::string methods = "all", bulks = "all", p_mode = "empirical", fit_mode = "truncated";
  int column = 1, workers = 0;
  double lambda = 50.0, eps = 0.01;
  long sims = 1000000;
  std::optional<std::uint64_t> seed;

  auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--input", input, "claim data file (csv or whitespace)");
    cmd->add_option("--column", column, "1-based data column")->default_val(1);
    cmd->add_option("--delimiter", delimiter, "auto|comma|space")->default_val("auto");
  };

  auto* select = app.add_subcommand("select", "estimate thresholds");
  add_data_flags(select);
  select->add_option("--method", methods, "m1..m7, comma list, or all")->default_val("all");
  select->add_option("--out", out_path, "also write the report here");

  auto* fit = app.add_subcommand("fit", "fit bulk and tail models at a selected threshold");
  add_data_flags(fit);
  fit->add_option("--method", methods, "threshold method m1..m7")->required();
  fit->add_option("--bulk", bulks, "gamma|lognormal|weibull|loggamma|all")->default_val("all");
  fit->add_option("--p-mode", p_mode, "empirical|theoretical")->default_val("empirical");
  fit->add_option("--fit-mode", fit_mode, "truncated|plain")->default_val("truncated");
  fit->add_option("--out", out_path, "write the composite model record here");

  auto* reserve = app.add_subcommand("reserve", "estimate the reserve quantile by Monte Carlo");
  add_data_flags(reserve);
  reserve->add_option("--model", model_path, "serialized composite model file");
  reserve->add_option("--method", methods, "threshold method when fitting from --input");
  reserve->add_option("--bulk", bulks, "bulk family when fitting from --input");
  reserve->add_option("--p-mode", p_mode, "empirical|theoretical")->default_val("empirical");
  reserve->add_option("--fit-mode", fit_mode, "truncated|plain")->default_val("truncated");
  reserve->add_option("--lambda", lambda, "expected claims per period")->required();
  reserve->add_option("--eps", eps, "tail probability of the reserve quantile")->required();
  reserve->add_option("--sims", sims, "Monte Carlo simulations")->default_val(1000000);
  reserve->add_option("--seed", seed, "64-bit seed (entropy if omitted)");
  reserve->add_option("--workers", workers, "worker threads (0 = hardware)")->default_val(0);
  reserve->add_option("--out", out_path, "also write the report here");

  auto* study = app.add_subcommand("study", "run a simulation-study experiment config");
  study->add_option("--config", config_path, "experiment config file")->required();
  study->add_option("--seed", seed, "override the config seed");
  study->add_option("--workers", workers, "worker threads (0 = hardware)")->default_val(0);
  study->add_option("--out", out_path, "output prefix for .cells.csv and .table.txt");

  auto* danish = app.add_subcommand("danish", "threshold, fit and reserve tables for fire data");
  add_data_flags(danish);
  danish->add_option("--lambda", lambda, "claims per year")->default_val(227.0);
  danish->add_option("--sims", sims, "Monte Carlo simulations per model")->default_val(1000000);
  danish->add_option("--seed", seed, "64-bit seed (entropy if omitted)");
  danish->add_option("--workers", workers, "worker threads (0 = hardware)")->default_val(0);
  danish->add_option("--p-mode", p_mode, "empirical|theoretical")->default_val("empirical");
  danish->add_option("--out", out_path, "also write the report here");

  try {
    app.parse(argc, argv);
    const char delim = parse_delimiter(delimiter);
    if (select->parsed()) {
      if (input.empty()) throw std::invalid_argument("select needs --input");
      return cmd_select(input, column, delim, methods, out_path);
    }
    if (fit->parsed()) {
      if (input.empty()) throw std::invalid_argument("fit needs --input");
      return cmd_fit(input, column, delim, methods, bulks, p_mode, fit_mode, out_path);
    }
    if (reserve->parsed())
      return cmd_reserve(input, column, delim, model_path, methods, bulks, p_mode, fit_mode,
                         lambda, eps, sims, seed, workers, out_path);
    if (study->parsed()) return cmd_study(config_path, seed, workers, out_path);
    if (danish->parsed()) {
      if (input.empty()) throw std::invalid_argument("danish needs --input");
      return cmd_danish(input, column, delim, lambda, sims, seed, workers, p_mode, out_path);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const eot::data_error& e) {
    std::cerr << "error = " << e.what() << "\nerror.code = 3\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error = " << e.what() << "\nerror.code = 2\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error = " << e.what() << "\nerror.code = 2\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error = " << e.what() << "\nerror.code = 4\n";
    return 4;
  }
}
