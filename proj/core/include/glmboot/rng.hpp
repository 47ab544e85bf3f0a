#pragma once

#include <cstdint>
#include <random>

namespace glmboot {

using Rng = std::mt19937_64;

// splitmix64 finalizer (Steele, Lea & Flood 2014). Used as a counter-based
// seed splitter: one root seed spawns any number of independent child
// streams, so stream k is identical whether work runs serially or on any
// number of threads.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

/// Seed of child stream `stream` derived from `root`. Equivalent to jumping
/// a splitmix64 generator seeded at `root` to position `stream`.
constexpr std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  return mix64(root + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace glmboot
