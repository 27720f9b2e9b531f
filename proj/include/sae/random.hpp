#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sae {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent substream, e.g. (base seed, cell, replication).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0)
{
    return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0)
{
    return Rng(derive_seed(base, a, b));
}

/// Binomial(trials, prob). Inversion for small trial counts, the standard
/// library's exact sampler otherwise.
inline std::int64_t sample_binomial(std::int64_t trials, double prob, Rng& rng)
{
    if (trials <= 0 || prob <= 0.0) {
        return 0;
    }
    if (prob >= 1.0) {
        return trials;
    }
    if (trials < 50) {
        const double q = 1.0 - prob;
        const double ratio = prob / q;
        double pk = std::pow(q, static_cast<double>(trials));
        double cdf = pk;
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::int64_t k = 0;
        while (u > cdf && k < trials) {
            pk *= ratio * static_cast<double>(trials - k) / static_cast<double>(k + 1);
            ++k;
            cdf += pk;
        }
        return k;
    }
    return std::binomial_distribution<std::int64_t>(trials, prob)(rng);
}

} // namespace sae
