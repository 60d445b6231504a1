// random.hpp
//
// Portable deterministic randomness.  std::mt19937_64 output is fixed by
// the standard but the std distributions are not, so sampling helpers
// are written out here to keep models byte-identical across toolchains.

#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cnamecloak::learn {

using rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed for stream `index` of base seed `seed` (tree i, fold j, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ull));
}

inline rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return rng(derive_seed(seed, stream)); }

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(rng& g, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do v = g();
  while (v >= limit);
  return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& v, rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(g, i)]);
}

}  // namespace cnamecloak::learn
