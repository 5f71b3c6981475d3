// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace postchain::sim {

/// SplitMix64 step, used to derive independent substream seeds from one
/// master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t substream = 0) {
    std::uint64_t s = master ^ (0xa076'1d64'78bd'642fULL * (stream + 1));
    std::uint64_t z = splitmix64(s);
    s ^= 0xe703'7ed1'a0b4'28dbULL * (substream + 1);
    return z ^ splitmix64(s);
}

/// Deterministic random source. The engine is the bit-exact mt19937_64; the
/// distribution transforms are implemented here so sampled sequences do not
/// depend on the standard library's unspecified algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 bits of randomness.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], inclusive.
    std::uint64_t uniform_u64(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        return lo + (span == 0 ? next_u64() : next_u64() % span);
    }

    /// Box-Muller normal draw.
    double normal(double mean, double sigma) {
        if (sigma <= 0) return mean;
        double u1 = uniform01();
        while (u1 <= 0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * M_PI * u2);
    }

    /// Number of Bernoulli(p) trials up to and including the first success
    /// (inverse transform), at least 1.
    std::uint64_t geometric_trials(double p) {
        if (p >= 1.0) return 1;
        double u = uniform01();
        while (u <= 0) u = uniform01();
        const double trials = std::ceil(std::log(u) / std::log1p(-p));
        if (trials < 1) return 1;
        if (trials > 9e18) return std::uint64_t(9e18);
        return std::uint64_t(trials);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace postchain::sim
