#pragma once

// Counter-based random number generation (Philox4x32-10, Salmon et al. 2011).
// Streams are addressed, not stepped: a generator is keyed by a 64-bit seed
// and positioned by (stream, substream, block). Two generators with the same
// coordinates produce identical output no matter which thread owns them,
// which is what makes the Monte Carlo results independent of the worker
// count.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "eot/special_functions.hpp"

namespace eot {

// splitmix64 finalizer; used to spread structured stream ids.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives a child stream id from a parent id and a tag (purpose constant,
// replicate index, cell index, ...). Deterministic and order-sensitive.
inline constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ (0x9E3779B97F4A7C15ull + mix64(tag)));
}

class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0, std::uint32_t substream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        block_(0),
        substream_(substream),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)),
        pos_(4) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  result_type operator()() {
    if (pos_ > 2) refill();
    const std::uint64_t lo = out_[pos_];
    const std::uint64_t hi = out_[pos_ + 1];
    pos_ += 2;
    return lo | (hi << 32);
  }

  // Uniform double in [0,1), 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
  }

  void refill() {
    std::uint32_t c0 = block_, c1 = substream_, c2 = stream_lo_, c3 = stream_hi_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mul_hi_lo(kM0, c0, hi0, lo0);
      mul_hi_lo(kM1, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW0;
      k1 += kW1;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    ++block_;
    pos_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t block_, substream_, stream_lo_, stream_hi_;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int pos_;
};

// Poisson draw: product-of-uniforms inversion for small means, Hormann's
// PTRS transformed rejection above (no normal approximation involved).
inline long poisson_draw(Philox& rng, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::domain_error("poisson_draw: lambda must be positive");
  if (lambda <= 30.0) {
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_lambda - lambda - ln_gamma(k + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

// Binomial draw by Bernoulli counting; n stays in the hundreds here.
inline long binomial_draw(Philox& rng, long n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_draw: bad arguments");
  long count = 0;
  for (long i = 0; i < n; ++i) {
    if (rng.uniform() < p) ++count;
  }
  return count;
}

}  // namespace eot
