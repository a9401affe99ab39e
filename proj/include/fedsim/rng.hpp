#pragma once

// Deterministic, portable randomness. std::mt19937_64 is fully specified by
// the standard, but the std distributions are not, so uniform/normal/gamma
// transforms are implemented here. Every consumer derives its own stream
// from (master seed, stream id, purpose), which makes generated data
// independent of evaluation order, thread count, and sweep position.

#include <cmath>
#include <cstdint>
#include <random>

namespace fedsim {

// splitmix64 finalizer; good avalanche, used for seed derivation and hashing.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Fixed purpose tags; the values are part of the on-disk reproducibility
// contract and must never be renumbered.
enum class Stream : std::uint64_t {
  ground_truth = 1,   // w* and per-node perturbations
  features = 2,       // training features
  noise = 3,          // regression label noise
  dirichlet = 4,      // partition proportions and assignments
  test_features = 5,  // held-out features
  misc = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id, Stream purpose) {
  std::uint64_t x = mix64(master ^ 0xA0761D6478BD642Full);
  x = mix64(x ^ (static_cast<std::uint64_t>(purpose) * 0xE7037ED1A0B428DBull));
  x = mix64(x ^ (stream_id * 0x8EBC6AF09C88C6E3ull));
  return x;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  Rng(std::uint64_t master, std::uint64_t stream_id, Stream purpose)
      : eng_(derive_seed(master, stream_id, purpose)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via the Marsaglia polar method (one spare cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted below shape 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = 1.0 - uniform01();  // in (0, 1]
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Uniform index in [0, n); rejection sampling keeps it unbiased.
  std::size_t index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t un = n;
    const std::uint64_t threshold = (0 - un) % un;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return static_cast<std::size_t>(r % un);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedsim
