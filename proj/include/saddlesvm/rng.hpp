#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace saddlesvm {

// All randomness derives from one user seed. Each consumer draws from its own
// named sub-stream so that, e.g., changing the partition never perturbs the
// index sequence of the solver.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(stream_seed(seed, stream));
}

namespace streams {
inline constexpr std::string_view kTransform = "transform";
inline constexpr std::string_view kIndex = "index";
inline constexpr std::string_view kPartition = "partition";
}  // namespace streams

/// Uniform index in [0, n) via rejection on the top bits; identical on every
/// standard library, unlike std::uniform_int_distribution.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - Rng::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

}  // namespace saddlesvm
