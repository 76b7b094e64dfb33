#ifndef CBANDIT_RNG_HPP
#define CBANDIT_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace cbandit {

// Deterministic RNG wrapper. All distributions are implemented here rather
// than with std:: distribution objects, whose output is implementation
// defined; this keeps seeded runs byte-identical across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform on [0,1) with 53 bits of precision.
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound), bound >= 1. Rejection sampling, no modulo bias.
    uint64_t uniform_below(uint64_t bound) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Sum of n Bernoulli(p) draws; exact and portable for the small n used here.
    int binomial(int n, double p) {
        int k = 0;
        for (int i = 0; i < n; ++i) {
            k += bernoulli(p) ? 1 : 0;
        }
        return k;
    }

    // Draws k distinct values from [0, n) via partial Fisher-Yates; result sorted.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    // Uniform permutation of [0, n).
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(uniform_below(i + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
};

// splitmix64 step; used to derive independent child seeds from a base seed.
inline uint64_t mix_seed(uint64_t base, uint64_t stream) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace cbandit

#endif
