#pragma once

#include <cstdint>
#include <random>

namespace qudio {

using Rng = std::mt19937_64;

// SplitMix64 step; used only to mix stream keys into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream keyed by (master seed, stream id, counter). Workers use
// (seed, node id + offset, round); the result must not depend on which OS
// thread executes the work.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0) {
    std::uint64_t x = seed;
    std::uint64_t a = splitmix64(x);
    x ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(x);
    x ^= counter * 0xc2b2ae3d27d4eb4fULL;
    std::uint64_t c = splitmix64(x);
    return Rng(a ^ (b << 1) ^ (c << 2));
}

// Uniform double in [0,1) from the top 53 bits; avoids the
// implementation-defined behaviour of std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_angle(Rng& rng) {
    return uniform01(rng) * 6.283185307179586476925286766559;
}

} // namespace qudio
