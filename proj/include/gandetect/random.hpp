#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace gandetect {

// std::shuffle and the std distributions are implementation-defined; these
// helpers only build on the fully specified mt19937_64 bit stream so seeded
// results stay stable across standard libraries.

/// Unbiased integer in [0, bound) by rejection sampling.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return draw % bound;
}

template <typename T>
void shuffle_in_place(std::span<T> items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// SplitMix64 finalizer; used to derive independent per-coordinate streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed ^ mix64(stream));
}

/// Standard normal sample that depends only on (seed, counter).
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
    const std::uint64_t a = mix64(seed ^ mix64(2 * counter));
    const std::uint64_t b = mix64(seed ^ mix64(2 * counter + 1));
    const double u1 = 1.0 - uniform_unit(a);  // (0, 1]
    const double u2 = uniform_unit(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gandetect
