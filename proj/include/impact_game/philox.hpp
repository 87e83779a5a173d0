#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace impact_game {

/**
 * Philox4x32-10 counter-based random number generator.
 *
 * Each 128-bit counter block maps independently to 128 pseudo-random bits, so
 * any (seed, path, time) triple can be turned into shocks without drawing
 * through a sequential stream. That is what makes path-level parallelism
 * bit-reproducible regardless of scheduling.
 */
namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace detail

/// The 10-round Philox block function.
inline Counter block(Counter c, Key k) {
    c = detail::round(c, k);
    for (int r = 1; r < 10; ++r) {
        k[0] += detail::kWeyl0;
        k[1] += detail::kWeyl1;
        c = detail::round(c, k);
    }
    return c;
}

/// Packs a 128-bit counter from a 64-bit index, a 32-bit time slot, and a
/// 32-bit stream tag, keyed by a 64-bit seed.
inline Counter make_counter(std::uint64_t index, std::uint32_t slot, std::uint32_t stream) {
    return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), slot, stream};
}

inline Key make_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline double to_unit_open(std::uint64_t bits) {
    // (0, 1]: Box-Muller needs log() of a strictly positive uniform.
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

inline double to_unit_half_open(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
}

/// Two independent standard normal variates from one counter block
/// (Box-Muller on the block's 128 bits).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t index, std::uint32_t slot,
                                         std::uint32_t stream) {
    const Counter out = block(make_counter(index, slot, stream), make_key(seed));
    const std::uint64_t u = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    const std::uint64_t v = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    const double radius = std::sqrt(-2.0 * std::log(to_unit_open(u)));
    const double angle = 6.283185307179586476925286766559 * to_unit_half_open(v);
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

} // namespace philox

} // namespace impact_game
