#pragma once

#include <cstdint>
#include <random>

namespace hinembed {

// splitmix64; used to derive independent child seeds from a run seed.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a) { return mix64(seed ^ mix64(a)); }

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix64(derive_seed(seed, a) ^ mix64(b + 0x517cc1b727220a95ULL));
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return mix64(derive_seed(seed, a, b) ^ mix64(c + 0x2545f4914f6cdd1dULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Uniform integer in [0, n). n must be > 0.
inline uint64_t rand_index(Rng& rng, uint64_t n) {
  return std::uniform_int_distribution<uint64_t>(0, n - 1)(rng);
}

inline double rand_unit(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace hinembed
