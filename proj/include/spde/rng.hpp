#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace spde {

/// splitmix64 finalizer. Used to derive per-realization seeds from a master
/// seed so that realization i is reproducible in isolation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for realization `index` under `master`. Documented scheme:
/// stage = master XOR golden-ratio multiple of (index+1), then splitmix64.
inline std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

/// Deterministic RNG wrapper. All transforms are spelled out here instead of
/// relying on std distributions, whose algorithms vary across standard
/// libraries; given one platform this makes every draw bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0,1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential(1) via inverse CDF; uniform() < 1 keeps the log argument
    /// strictly positive.
    double exponential() { return -std::log1p(-uniform()); }

    /// Poisson count by summing unit-rate interarrivals until `mean` is
    /// exceeded. O(mean) draws, no underflow for large means.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        double acc = 0.0;
        std::uint64_t k = 0;
        while (true) {
            acc += exponential();
            if (acc > mean) return k;
            ++k;
        }
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace spde
