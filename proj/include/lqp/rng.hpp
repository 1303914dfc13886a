#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace lqp {

// Self-contained PRNG used for every seeded draw in the project. Keeping the
// generator and the distributions in-house makes traces reproducible byte for
// byte regardless of the standard library build.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1]; safe as a log() argument.
    double uniform01_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller.
    double gaussian() {
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

// Derives an independent stream seed from a base seed and a stream key.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t key) {
    SplitMix64 g(base + 0x9e3779b97f4a7c15ull * (key + 1));
    return g.next();
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t k1, std::uint64_t k2) {
    return mix_seed(mix_seed(base, k1), k2);
}

// Fisher-Yates with our own bounded draw; std::shuffle is not pinned across
// library implementations.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace lqp
