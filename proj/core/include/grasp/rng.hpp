#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace grasp::rng {

// All randomness in the library flows through this header. Standard-library
// distributions are implementation-defined, so uniform/gaussian draws are
// built by hand on top of xoshiro256++; two runs with the same seed produce
// bitwise-identical streams.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to fold substream names into seeds.
inline std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) {
            word = splitmix64(sm);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Fisher-Yates index for shuffling: uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4] = {};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fold a name into a seed, for handing independent child seeds to
// components that derive their own substreams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t key = seed ^ hash_name(name);
    return splitmix64(key);
}

// Named substream derivation: every consumer owns an independent stream
// keyed by (seed, name) or (seed, name, index). No ambient entropy.
inline Rng substream(std::uint64_t seed, std::string_view name) {
    std::uint64_t key = seed ^ hash_name(name);
    return Rng(splitmix64(key));
}

inline Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    std::uint64_t key = seed ^ hash_name(name);
    key = splitmix64(key);
    key ^= 0x9E3779B97F4A7C15ULL * (index + 1);
    return Rng(splitmix64(key));
}

}  // namespace grasp::rng
