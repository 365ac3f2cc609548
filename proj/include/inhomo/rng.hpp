#pragma once

// Counter-based RNG (Philox-4x32-10) so every matrix entry is a pure
// function of (seed, stream, i, j): row ranges can be filled in any
// order or in parallel with identical output.

#include <array>
#include <cmath>
#include <cstdint>

namespace inhomo {

namespace philox {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> block(std::uint64_t key,
                                          std::array<std::uint32_t, 4> c) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        std::array<std::uint32_t, 4> next;
        next[0] = static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0;
        next[1] = static_cast<std::uint32_t>(p1);
        next[2] = static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1;
        next[3] = static_cast<std::uint32_t>(p0);
        c = next;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    // uniform in (0, 1]; never 0 so it is safe inside a log
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

}  // namespace philox

// Two independent N(0,1) draws for lattice point (i, j) of stream
// `stream` under `seed` (Box-Muller over one Philox block).
struct GaussianPair {
    double a, b;
};

inline GaussianPair gaussian_at(std::uint64_t seed, std::uint32_t stream,
                                std::uint64_t i, std::uint64_t j) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
        static_cast<std::uint32_t>(j),
        static_cast<std::uint32_t>(j >> 32) ^ stream};
    auto r = philox::block(seed, ctr);
    double u1 = philox::to_unit(r[0], r[1]);
    double u2 = philox::to_unit(r[2], r[3]);
    double rad = std::sqrt(-2.0 * std::log(u1));
    return {rad * std::cos(2.0 * M_PI * u2), rad * std::sin(2.0 * M_PI * u2)};
}

inline double uniform_at(std::uint64_t seed, std::uint32_t stream,
                         std::uint64_t i, std::uint64_t j) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
        static_cast<std::uint32_t>(j),
        static_cast<std::uint32_t>(j >> 32) ^ stream};
    auto r = philox::block(seed, ctr);
    return philox::to_unit(r[0], r[1]);
}

}  // namespace inhomo
