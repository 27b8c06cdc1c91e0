#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace nicpool {

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64, used to derive per-component RNG seeds from the scenario seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::string_view tag) {
    return mix_seed(base ^ fnv1a64(tag));
}

// ceil(num/den) for positive reals, guarded against ratios that land a hair
// above an integer due to rounding in the division.
inline long iceil_ratio(double num, double den) {
    double r = num / den;
    return static_cast<long>(std::ceil(r - 1e-9));
}

inline long ifloor_ratio(double num, double den) {
    double r = num / den;
    return static_cast<long>(std::floor(r + 1e-9));
}

}  // namespace nicpool
