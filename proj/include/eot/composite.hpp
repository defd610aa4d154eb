#pragma once

// The composite severity model: a right-truncated bulk distribution below
// the threshold b carrying probability mass p_below, and a Pareto type II
// excess distribution above it carrying the rest.
//
//   f(z) = p f1(z)/F1(b)            for 0 < z <= b
//   f(z) = (1-p) (a/B)(1+(z-b)/B)^-(a+1)   for z > b

#include <cmath>
#include <string>

#include "eot/distributions.hpp"
#include "eot/errors.hpp"
#include "eot/fitting.hpp"
#include "eot/kv_record.hpp"
#include "eot/rng.hpp"
#include "eot/tailselect.hpp"

namespace eot {

enum class PMode { Empirical, Theoretical };

inline const char* p_mode_name(PMode m) { return m == PMode::Empirical ? "empirical" : "theoretical"; }

inline PMode parse_p_mode(const std::string& s) {
  if (s == "empirical") return PMode::Empirical;
  if (s == "theoretical") return PMode::Theoretical;
  throw std::invalid_argument("unknown p mode: " + s);
}

struct CompositeModel {
  DistributionSpec bulk;
  double b = 0.0;
  double tail_alpha = 0.0;
  double tail_beta = 0.0;
  double p_below = 0.0;
  PMode p_mode = PMode::Theoretical;
};

inline CompositeModel make_composite(const DistributionSpec& bulk, double b, double tail_alpha,
                                     double tail_beta, double p_below, PMode p_mode) {
  validate_spec(bulk);
  if (!(b > support_min(bulk))) throw std::domain_error("make_composite: threshold outside bulk support");
  if (!(tail_alpha > 0.0) || !(tail_beta > 0.0))
    throw std::domain_error("make_composite: tail parameters must be positive");
  if (!(p_below >= 0.0 && p_below <= 1.0))
    throw std::domain_error("make_composite: p_below outside [0,1]");
  return {bulk, b, tail_alpha, tail_beta, p_below, p_mode};
}

inline CompositeModel build_composite(const BulkFit& bulk, const TailFit& tail, double p_below,
                                      PMode p_mode) {
  if (bulk.b != tail.b) throw std::invalid_argument("build_composite: bulk and tail thresholds differ");
  if (!(p_below > 0.0 && p_below < 1.0))
    throw std::domain_error("build_composite: p_below outside (0,1)");
  return make_composite(bulk.spec, bulk.b, tail.alpha, tail.beta, p_below, p_mode);
}

// The continuous lognormal-Pareto composite is a composite model whose
// below-threshold mass is its own mixing weight.
inline CompositeModel to_composite(const ScollnikFit& fit) {
  return make_composite({Family::LogNormal, fit.mu, fit.sigma}, fit.b, fit.alpha, fit.beta, fit.r,
                        PMode::Theoretical);
}

// Observed proportion of claims at or below the threshold.
inline double p_below_empirical(const SortedSample& s, double b_hat) {
  const auto& v = s.values();
  const auto it = std::upper_bound(v.begin(), v.end(), b_hat);
  return static_cast<double>(it - v.begin()) / static_cast<double>(s.n());
}

// Fitted bulk cdf at the threshold.
inline double p_below_theoretical(const BulkFit& bulk, double b_hat) {
  if (!bulk.converged) throw numerical_error("p_below_theoretical: bulk fit did not converge");
  return cdf(bulk.spec, b_hat);
}

inline double composite_pdf(const CompositeModel& m, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("composite_pdf: z must be positive");
  if (z <= m.b) {
    if (z <= support_min(m.bulk)) return 0.0;
    return m.p_below * pdf(m.bulk, z) / cdf(m.bulk, m.b);
  }
  return (1.0 - m.p_below) * pareto_pdf(m.tail_alpha, m.tail_beta, z - m.b);
}

inline double composite_cdf(const CompositeModel& m, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("composite_cdf: z must be positive");
  if (z <= m.b) {
    if (z <= support_min(m.bulk)) return 0.0;
    return m.p_below * cdf(m.bulk, z) / cdf(m.bulk, m.b);
  }
  return m.p_below + (1.0 - m.p_below) * pareto_cdf(m.tail_alpha, m.tail_beta, z - m.b);
}

// Sampler with the truncation mass cached; below-threshold draws use the
// truncated inversion, above-threshold ones are b plus a Pareto excess.
class CompositeSampler {
 public:
  explicit CompositeSampler(const CompositeModel& m) : model_(m), bulk_(m.bulk, m.b) {}

  const CompositeModel& model() const { return model_; }

  double draw(Philox& rng) const {
    if (rng.uniform() < model_.p_below) return bulk_.draw(rng);
    return model_.b + pareto_draw(model_.tail_alpha, model_.tail_beta, rng);
  }

  double draw_bulk(Philox& rng) const { return bulk_.draw(rng); }
  double draw_tail(Philox& rng) const {
    return model_.b + pareto_draw(model_.tail_alpha, model_.tail_beta, rng);
  }

 private:
  CompositeModel model_;
  TruncatedSampler bulk_;
};

inline std::vector<double> sample_composite(const CompositeModel& m, Philox& rng,
                                            std::size_t count) {
  if (count < 1) throw std::invalid_argument("sample_composite: count must be >= 1");
  const CompositeSampler sampler(m);
  std::vector<double> out(count);
  for (auto& z : out) z = sampler.draw(rng);
  return out;
}

inline KvRecord composite_to_record(const CompositeModel& m) {
  KvRecord rec;
  rec.set_i64("schema", 1);
  rec.set("kind", "composite_model");
  rec.set("bulk.family", family_name(m.bulk.family));
  rec.set_f64("bulk.param1", m.bulk.param1);
  rec.set_f64("bulk.param2", m.bulk.param2);
  rec.set_f64("threshold", m.b);
  rec.set_f64("tail.alpha", m.tail_alpha);
  rec.set_f64("tail.beta", m.tail_beta);
  rec.set_f64("p_below", m.p_below);
  rec.set("p_mode", p_mode_name(m.p_mode));
  return rec;
}

inline std::string serialize_composite(const CompositeModel& m) {
  return composite_to_record(m).to_string();
}

inline CompositeModel composite_from_record(const KvRecord& rec) {
  if (rec.i64("schema") != 1) throw data_error("composite record: unsupported schema");
  if (rec.str("kind") != "composite_model") throw data_error("composite record: wrong kind");
  return make_composite({parse_family(rec.str("bulk.family")), rec.f64("bulk.param1"),
                         rec.f64("bulk.param2")},
                        rec.f64("threshold"), rec.f64("tail.alpha"), rec.f64("tail.beta"),
                        rec.f64("p_below"), parse_p_mode(rec.str("p_mode")));
}

inline CompositeModel parse_composite(const std::string& text) {
  return composite_from_record(KvRecord::parse(text));
}

// Digest identifying the model a result was computed from.
inline std::string model_digest(const CompositeModel& m) {
  return text_digest(serialize_composite(m));
}

}  // namespace eot
