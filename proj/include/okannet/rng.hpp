#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace okannet {

// Deterministic random source. All stochastic behaviour in the library
// draws through one of these, seeded explicitly by the caller. Mapping
// from raw engine output to each distribution is pinned here rather than
// delegated to std:: distributions, so streams are reproducible across
// standard library implementations.
class RandomEngine {
 public:
  explicit RandomEngine(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Box-Muller; draws two uniforms per call.
  double normal(double mean, double stddev) {
    const double u1 =
        (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), bitmask rejection.
  int64_t uniform_int(int64_t n) {
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t mask = std::bit_ceil(un) - 1;
    uint64_t r;
    do {
      r = gen_() & mask;
    } while (r >= un);
    return static_cast<int64_t>(r);
  }

  uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer, used to derive independent stream seeds.
inline uint64_t hash_u64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  return hash_u64(hash_u64(a) + 0x9e3779b97f4a7c15ULL * b);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Fisher-Yates with the pinned integer draw above.
template <typename V>
void shuffle_in_place(V& v, RandomEngine& rng) {
  for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
    const int64_t j = rng.uniform_int(i + 1);
    std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
  }
}

}  // namespace okannet
