#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lazygnn {

// Deterministic PRNG used everywhere so that runs reproduce bit-for-bit
// across platforms. xoshiro256** seeded through splitmix64; normal variates
// via the Marsaglia polar method.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    // Derives an independent stream, e.g. one per purpose (init, dropout, shuffle).
    Rng derive(uint64_t tag) const {
        uint64_t mix = state_[0] ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        return Rng(mix);
    }

    uint64_t next_u64() {
        uint64_t* s = state_;
        const uint64_t result = rotl(s[1] * 5, 7) * 9;
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) by rejection, unbiased.
    uint64_t uniform_index(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal, Marsaglia polar with one cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<uint32_t> permutation(size_t n) {
        std::vector<uint32_t> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
        for (size_t i = n; i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_index(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lazygnn
