#pragma once

#include <cstdint>
#include <random>

namespace marc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (master, point, trial); the result does not depend on
// the order or thread in which trials are evaluated.
inline Rng substream(std::uint64_t master, std::uint64_t point, std::uint64_t trial) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ mix64(point + 0x632be59bd9b4e019ULL));
  s = mix64(s ^ mix64(trial + 0x8cb92ba72f3d8dd7ULL));
  return Rng(s);
}

// Stream index reserved for codebook generation in coded runs.
inline constexpr std::uint64_t kCodebookStream = 0xC0DEB00CULL;

}  // namespace marc
