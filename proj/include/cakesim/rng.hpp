#pragma once

#include <cstdint>

namespace cakesim {

// xoshiro256** seeded through splitmix64. Self-contained so that runs are
// reproducible across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // Unbiased integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t x, r;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > uint64_t(0) - n);
        return r;
    }

    // Uniform in (0, 1]; never returns 0 so log() stays finite.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Derived generator for an independent stream.
    Rng fork(uint64_t stream) {
        uint64_t x = next_u64() ^ (stream * 0x9E3779B97F4A7C15ull);
        return Rng(splitmix64(x));
    }

  private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    static constexpr uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t s_[4];
};

} // namespace cakesim
