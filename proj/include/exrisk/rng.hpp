#pragma once

#include <cstdint>
#include <random>

namespace exrisk {

// SplitMix64 finalizer. Spreads correlated inputs (counters, small seeds)
// over the full 64-bit range.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-trial seed derived from (seed, n, dim, trial). Each grid cell and each
// trial gets an independent, individually reproducible stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t n,
                              std::uint64_t dim, std::uint64_t trial) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ n);
  h = mix64(h ^ dim);
  h = mix64(h ^ trial);
  return h;
}

// Deterministic uniform generator. std::mt19937_64 output is pinned by the
// standard and the float conversion below avoids the implementation-defined
// std::uniform_real_distribution, so streams are bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace exrisk
