#pragma once

#include <cstdint>
#include <random>

namespace lqw {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: the same (seed, path) always yields the
// same engine, independent of how many other streams were opened.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(seed, a, b));
}

// Stream tags so call sites never collide by accident.
namespace stream {
constexpr std::uint64_t kSimulate = 0x51;
constexpr std::uint64_t kBatches = 0x52;
constexpr std::uint64_t kMeasure = 0x53;
constexpr std::uint64_t kPerturb = 0x54;
constexpr std::uint64_t kInstances = 0x55;
constexpr std::uint64_t kSula = 0x56;
}  // namespace stream

}  // namespace lqw
