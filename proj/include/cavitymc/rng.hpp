#pragma once
#include <cstdint>
#include <random>

namespace cavitymc {

// splitmix64 finalizer; well-mixed 64-bit hash for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Engine for one logical task: the same (master_seed, stream_id) always
// yields the same stream, independent of worker count and scheduling.
inline std::mt19937_64 make_stream(std::uint64_t master_seed,
                                   std::uint64_t stream_id) {
  std::uint64_t s = splitmix64(master_seed ^ (0x9E3779B97F4A7C15ull * (stream_id + 1)));
  s = splitmix64(s + stream_id);
  return std::mt19937_64(s);
}

}  // namespace cavitymc
