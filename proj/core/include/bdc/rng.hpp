#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bdc {

// splitmix64 finalizer; the building block for every seeded stream in the library.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of a named substream ("data", "blocks", "minibatch", ...) of a master seed.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view name) {
  return mix64(master ^ mix64(hash_name(name)));
}

/// Stateless generator: value k of stream s is a pure function of (seed, s, k).
/// Lets a solver replay block choice or minibatch k without replaying 0..k-1.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const {
    return mix64(mix64(seed_ ^ mix64(counter)) + lane);
  }
  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter, std::uint64_t lane = 0) const {
    return static_cast<double>(bits(counter, lane) >> 11) * 0x1.0p-53;
  }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n, std::uint64_t counter, std::uint64_t lane = 0) const {
    // Multiply-shift; bias is below 2^-64 * n, irrelevant at our sizes.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(counter, lane)) * n) >> 64);
  }

 private:
  std::uint64_t seed_;
};

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::string_view name) {
  return Engine(substream_seed(master, name));
}

}  // namespace bdc
