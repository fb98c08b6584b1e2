#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lsv {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream number `index` derived from `seed`. Streams depend only on
/// (seed, index), so replicate r sees the same draws at any thread count.
inline Engine make_stream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Engine(seq);
}

/// Independent seed for a sub-experiment labelled `tag`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& g) noexcept {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double unit_exponential(Engine& g) noexcept { return -std::log1p(-uniform01(g)); }

}  // namespace lsv
