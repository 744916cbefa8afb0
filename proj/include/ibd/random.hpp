#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace ibd::rng {

// All randomness in the engine flows through mt19937_64 plus the helpers
// below. std::uniform_int_distribution and friends are implementation
// defined, so they are avoided: every sampled artifact must be bitwise
// reproducible from its seed.

using Engine = std::mt19937_64;

// Mixes a seed with a stream tag so one user seed can drive several
// independent generators (rows, permutations, per-tree draws, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Unbiased integer in [0, n) by rejection sampling.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double unit(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Box-Muller, fully specified (no library distribution involved).
inline double normal(Engine& g, double mean = 0.0, double stddev = 1.0) {
    double u1 = unit(g);
    while (u1 <= 0.0) u1 = unit(g);
    const double u2 = unit(g);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Engine& g) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(below(g, i));
        std::swap(items[i - 1], items[j]);
    }
}

// Uniform random permutation of {0, ..., p-1}.
inline std::vector<std::size_t> permutation(std::size_t p, Engine& g) {
    std::vector<std::size_t> perm(p);
    for (std::size_t i = 0; i < p; ++i) perm[i] = i;
    shuffle(perm, g);
    return perm;
}

// k distinct indices from [0, n), in draw order. Requires k <= n.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Engine& g) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(g, n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

} // namespace ibd::rng
