#pragma once

// Self-contained seeded RNG (xoshiro256++ seeded via splitmix64).
// Every random quantity in the pipeline flows from an explicit 64-bit seed
// through named sub-streams, so results are bit-reproducible across
// platforms and standard-library versions.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace fg2 {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child seed from (seed, name). Used to carve independent
// sub-streams: derive_seed(world, "gestures"), derive_seed(world, "fmri/3"), ...
inline uint64_t derive_seed(uint64_t seed, std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a 64
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    uint64_t s = seed ^ h;
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : seed0_(seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t seed() const { return seed0_; }

    Rng child(std::string_view name) const { return Rng(derive_seed(seed0_, name)); }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    // Standard normal via Box-Muller (no cached spare: fixed consumption of
    // two uniforms per draw keeps streams easy to reason about).
    double normal() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4] = {};
    uint64_t seed0_ = 0;
};

} // namespace fg2
