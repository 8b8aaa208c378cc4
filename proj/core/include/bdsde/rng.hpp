#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bdsde {

// Philox-4x32-10 counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so path m / step i / component j can be sampled
// in any order, by any number of threads, with identical bits.
namespace philox {

inline constexpr std::uint32_t kW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter),
        static_cast<std::uint32_t>(counter >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(stream >> 32),
    };
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kM4x32A, ctr[0], hi0, lo0);
        mul_hi_lo(kM4x32B, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kW32A;
        k1 += kW32B;
    }
    return ctr;
}

} // namespace philox

// Top byte of the stream id separates generator uses; the low 56 bits
// index paths (or other per-object streams) within the domain.
enum class RngDomain : std::uint64_t {
    forward_w = 0,
    backward_b = 1,
    bridge = 2,
    scatter = 3,
};

inline std::uint64_t rng_stream(RngDomain dom, std::uint64_t index) {
    return (static_cast<std::uint64_t>(dom) << 56) | (index & 0x00FFFFFFFFFFFFFFull);
}

// uniform in (0,1]; never 0, safe under log(). The largest inputs round to
// exactly 1.0, which Box-Muller tolerates (log(1) = 0).
inline double u64_open01(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

struct NormalPair {
    double z0, z1;
};

// One Philox block -> two independent standard normals (Box-Muller, no
// rejection, so the draw count per counter is fixed).
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const auto b = philox::block(seed, stream, counter);
    const std::uint64_t ua = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    const std::uint64_t ub = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    const double u1 = u64_open01(ua);
    const double u2 = u64_open01(ub);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

// Normal draw addressed by (step, component); components are packed two per
// Philox block. Supports step < 2^56 and component < 512.
inline double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t step, int component) {
    const std::uint64_t counter = (step << 8) | static_cast<std::uint64_t>(component >> 1);
    const NormalPair p = normal_pair(seed, stream, counter);
    return (component & 1) ? p.z1 : p.z0;
}

// Deterministic seed derivation for secondary generators tied to one master
// seed (e.g. the backward driver when only a single seed is supplied).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    const auto b = philox::block(seed, salt, 0x9E3779B97F4A7C15ull);
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[3];
}

} // namespace bdsde
