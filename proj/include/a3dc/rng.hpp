#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "a3dc/errors.hpp"

namespace a3dc {

// 64-bit finalizer used both as the SplitMix64 output scrambler and as the
// seed-derivation mixer. Pure integer arithmetic, identical on every platform.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Derives the seed of a named substream from a root seed. Streams are keyed
// by a purpose tag plus up to two integer coordinates (e.g. epoch, clip
// index), so every stochastic component owns a disjoint, reproducible stream:
//
//   seed' = mix64(mix64(mix64(root ^ fnv1a64(tag)) ^ k1) ^ k2)
//
// Changing this chain is a checkpoint/dataset format break.
inline uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t k1 = 0,
                            uint64_t k2 = 0) {
    return mix64(mix64(mix64(root ^ fnv1a64(tag)) ^ k1) ^ k2);
}

// SplitMix64 generator. Single-owner: never shared across threads. Identical
// seed gives an identical draw stream on every platform (integer ops only;
// floats are fixed-width scalings of the integer draws).
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0,1) with 24 random bits.
    float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

    // Uniform integer in [lo, hi] inclusive, unbiased via rejection sampling:
    // draws above the largest multiple of the range size are discarded.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (lo > hi) {
            throw ValueError("uniform_int: lo " + std::to_string(lo) + " > hi " +
                             std::to_string(hi));
        }
        const uint64_t range = uint64_t(hi) - uint64_t(lo) + 1;
        if (range == 0) return int64_t(next_u64());  // full 64-bit span
        const uint64_t rem = (std::numeric_limits<uint64_t>::max() % range + 1) % range;
        const uint64_t limit = std::numeric_limits<uint64_t>::max() - rem;
        for (;;) {
            const uint64_t x = next_u64();
            if (x <= limit) return lo + int64_t(x % range);
        }
    }

    // Uniform real in [lo, hi).
    template <typename Scalar>
    Scalar uniform(Scalar lo, Scalar hi) {
        if constexpr (sizeof(Scalar) == sizeof(float)) {
            return lo + (hi - lo) * Scalar(next_float());
        } else {
            return lo + (hi - lo) * Scalar(next_double());
        }
    }

    uint64_t state() const { return state_; }

  private:
    uint64_t state_;
};

}  // namespace a3dc
