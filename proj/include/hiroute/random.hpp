#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hiroute {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and a tuple of
/// stream labels (run seed, job id, node id, ...).
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t v : labels) h = splitmix64(h ^ splitmix64(v));
  return h;
}

// Stream labels so that changing one consumer never perturbs another.
enum class Stream : std::uint64_t {
  kArrivals = 1,
  kMixtures = 2,
  kRouting = 3,
  kConfidence = 4,
  kPlacement = 5,
  kWorld = 6,
};

inline Rng make_rng(std::uint64_t root, Stream s) {
  return Rng(derive_seed(root, {static_cast<std::uint64_t>(s)}));
}

}  // namespace hiroute
