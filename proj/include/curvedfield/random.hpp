#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace curvedfield::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32-10 counter-based generator (Salmon et al. 2011).
inline Counter philox4x32(Counter ctr, Key key) {
  constexpr std::uint32_t M0 = 0xD2511F53u;
  constexpr std::uint32_t M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform double in the open interval (0, 1) from the top 52 of 64 random bits;
/// (bits + 1/2) 2^-52 is exact, so neither endpoint is reachable.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Counter& ctr, const Key& key) {
  const Counter r = philox4x32(ctr, key);
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(angle), rad * std::sin(angle)};
}

/// Standard complex Gaussian (E|xi|^2 = 1, independent real and imaginary parts).
inline std::complex<double> complex_normal(const Counter& ctr, const Key& key) {
  const auto z = normal_pair(ctr, key);
  return {z[0] * std::numbers::sqrt2 / 2.0, z[1] * std::numbers::sqrt2 / 2.0};
}

/// Streams used by the synthesis routines; the tag occupies the low byte of word 0.
enum class Stream : std::uint32_t { scalar_field = 1, spin_field = 2 };

/// Counter for draw (l, m, q) of a stream with spin weight s.
inline Counter counter_for(Stream stream, int s, int l, int m, std::uint32_t q) {
  return {static_cast<std::uint32_t>(stream) | (static_cast<std::uint32_t>(s + 128) << 8),
          static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(m), q};
}

}  // namespace curvedfield::rng
