#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace penpress {

// SplitMix64 with explicit uniform/Gaussian transforms. <random> engines are
// portable but the standard distributions are implementation-defined, and the
// synthetic corpus freezes expected values per seed, so every bit of the
// stream has to be pinned down here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n) without the low-bit bias of a plain modulus.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Box-Muller, cosine branch only: one value out, two uniforms in. Keeping
    // no cached spare makes the draw count per call constant.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable sub-seed for a named stream (e.g. one synthetic user, one VQ model).
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
    Rng r(seed ^ fnv1a64(tag));
    return r.next_u64();
}

}  // namespace penpress
