#pragma once

// Deterministic random numbers.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Everything layered on top (uniform doubles, bounded integers,
// Gaussians) is implemented here instead of using the <random>
// distributions, which are implementation-defined. Gaussians use the
// Marsaglia polar method. Results are bit-identical within one build;
// across platforms they agree up to the libm used for log/sqrt.

#include <cmath>
#include <cstdint>
#include <random>

namespace smoothkm {

/// SplitMix64 finalizer. Used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Folds each part into the seed with splitmix64: s <- splitmix64(s ^ splitmix64(part)).
template <class... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t base, Parts... parts) {
    std::uint64_t s = splitmix64(base);
    ((s = splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(parts)))), ...);
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Standard normal via the polar method; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace smoothkm
