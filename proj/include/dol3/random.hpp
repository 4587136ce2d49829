#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace dol3
{

using Rng = std::mt19937_64;

namespace detail
{

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

/// Seed for an independent named stream. Streams differing in name, index or
/// salt are statistically unrelated, so perturbing one leaves the others intact.
inline constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name,
                                           std::uint64_t index = 0, std::uint64_t salt = 0) noexcept
{
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ detail::fnv1a(name));
    h = detail::splitmix64(h ^ index);
    return detail::splitmix64(h ^ salt);
}

inline Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0,
                       std::uint64_t salt = 0)
{
    return Rng{stream_seed(seed, name, index, salt)};
}

/// Uniform double in [0, 1) with 53 random bits. Independent of the standard
/// library's distribution implementation, so traces match across toolchains.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling; n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n)
{
    const std::uint64_t limit = Rng::max() - (Rng::max() - n + 1) % n;
    std::uint64_t x;
    do
    {
        x = rng();
    } while (x > limit);
    return x % n;
}

/// Standard normal via Box-Muller (one variate per call, two uniforms consumed).
inline double standard_normal(Rng& rng)
{
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace dol3
