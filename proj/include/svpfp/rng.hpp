#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based Philox4x32-10 (Salmon et al. 2011). Every draw is a pure
// function of (key, counter), which is what makes increments replayable.
namespace svpfp::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline Key make_key(std::uint64_t seed, std::uint64_t realization) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(realization + 0x632BE59BD9B4E019ull));
  return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

/// Uniform in (0, 1] from 64 random bits.
inline double to_unit(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

enum Stream : std::uint32_t {
  kExternal = 0,
  kMagnetic = 1,
  kInternal = 2,
  kSampling = 3,
};

/// Standard normal pair addressed by (key, stream, a, b); a and b are 64-bit
/// coordinates (e.g. step and mode), stream tags the independent family.
inline std::array<double, 2> normal_pair(const Key& key, std::uint32_t stream, std::uint64_t a,
                                         std::uint64_t b) {
  const Counter ctr{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32) ^ (stream << 24)};
  const Counter r = philox4x32(ctr, key);
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925 * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

inline double normal(const Key& key, std::uint32_t stream, std::uint64_t a, std::uint64_t b) {
  return normal_pair(key, stream, a, b)[0];
}

inline double uniform(const Key& key, std::uint32_t stream, std::uint64_t a, std::uint64_t b) {
  const Counter ctr{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32) ^ (stream << 24)};
  const Counter r = philox4x32(ctr, key);
  return to_unit(r[0], r[1]);
}

}  // namespace svpfp::rng
