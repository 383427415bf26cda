#pragma once

#include <cstdint>
#include <random>

namespace graphrep {

/// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent sub-streams derived from one experiment seed, so that e.g.
/// dataset noise and parameter init never share a generator state.
enum class Stream : std::uint64_t {
  Dataset = 1,
  Split = 2,
  Init = 3,
  Probe = 4,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream) {
  return splitmix64(base ^ (static_cast<std::uint64_t>(stream) * 0xd6e8feb86659fd93ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace graphrep
