#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace embodied {

// Deterministic random streams. Every consumer derives its own stream from
// (seed, tag) so that adding a consumer never perturbs the draws of another,
// and models built from the same seed share identical common-layer draws.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view tag)
        : gen_(splitmix64(seed ^ fnv1a64(tag))) {}

    // Uniform double in [0,1) with 53 random bits; avoids the
    // implementation-defined std::uniform_real_distribution.
    double canonical() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform double in [-limit, limit).
    double uniform(double limit) { return (2.0 * canonical() - 1.0) * limit; }

    // Uniform integer in [0, n) by rejection; portable across standard libraries.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= lim);
        return v % n;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx);
        return idx;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::mt19937_64& raw() { return gen_; }

private:
    std::mt19937_64 gen_;
};

} // namespace embodied
