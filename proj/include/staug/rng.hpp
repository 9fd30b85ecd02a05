#pragma once

// Counter-based random numbers: every draw is a pure function of (seed, counters...),
// so results do not depend on iteration order or thread partitioning.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace staug::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed) noexcept { return splitmix64(seed); }

template <typename... Rest>
constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t first, Rest... rest) noexcept {
    return hash(splitmix64(seed ^ splitmix64(first + 0x632be59bd9b4e019ULL)), static_cast<std::uint64_t>(rest)...);
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Multiply-shift; bias is below 2^-32 for the n used here.
constexpr std::uint32_t below(std::uint64_t bits, std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(((bits >> 32) * n) >> 32);
}

/// Standard normal via Box-Muller on two independent counter draws.
inline double normal(std::uint64_t bits_a, std::uint64_t bits_b) noexcept {
    const double u1 = 1.0 - to_unit(bits_a);  // (0, 1]
    const double u2 = to_unit(bits_b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace staug::rng
