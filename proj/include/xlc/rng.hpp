// Deterministic random-number streams.
//
// Every stochastic quantity in the toolkit is drawn from a Pcg32 stream
// derived from (master seed, domain, index). Streams are independent, so
// sample i of a dataset can be generated without generating samples 0..i-1,
// and regenerating with the same seed is bit-identical on every platform.
// The mixing chain below is part of the on-disk compatibility contract:
// changing it changes every generated dataset.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace xlc {

inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Minimal PCG32 (pcg32_random_r / pcg32_srandom_r).
class Pcg32 {
public:
  Pcg32() : Pcg32(0xda3e39cb94b95bdbull, 0x853c49e6748fea9bull) {}

  Pcg32(uint64_t initstate, uint64_t initseq) {
    state_ = 0u;
    inc_ = (initseq << 1u) | 1u;
    next_u32();
    state_ += initstate;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t oldstate = state_;
    state_ = oldstate * 6364136223846793005ull + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((oldstate >> 18u) ^ oldstate) >> 27u);
    uint32_t rot = static_cast<uint32_t>(oldstate >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0, bound) without modulo bias (classic pcg32_boundedrand).
  uint32_t bounded(uint32_t bound) {
    if (bound < 2) return 0;
    uint32_t threshold = -bound % bound;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Circular symmetric complex Gaussian CN(0, variance): each part N(0, variance/2).
  // Consumes exactly one Box-Muller pair and leaves the spare cache untouched.
  std::complex<double> cnormal(double variance) {
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-std::log(u1) * variance);  // sqrt(variance/2) * sqrt(-2 log u1)
    double t = 2.0 * 3.141592653589793238462643383279502884 * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

private:
  uint64_t state_;
  uint64_t inc_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream domains. Datasets with different purposes must never share streams.
namespace stream_domain {
inline constexpr uint64_t train = 1;
inline constexpr uint64_t val = 2;
inline constexpr uint64_t test = 3;
inline constexpr uint64_t covariance = 4;
inline constexpr uint64_t shuffle = 5;
inline constexpr uint64_t init = 6;
}  // namespace stream_domain

inline Pcg32 make_stream(uint64_t master_seed, uint64_t domain, uint64_t index) {
  uint64_t h = master_seed;
  h = mix64(h ^ (domain * 0xA0761D6478BD642Full));
  h = mix64(h ^ (index * 0xE7037ED1A0B428DBull));
  return Pcg32(h, mix64(h ^ domain) ^ index);
}

}  // namespace xlc
