#pragma once

#include "pointprompt/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace pointprompt {

// Seeded random source. std::mt19937_64 is fully specified by the standard,
// and the Gaussian transform is written out here instead of using
// std::normal_distribution (whose output sequence is implementation-defined),
// so identical seeds give identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    Scalar uniform() {
        return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53;
    }

    Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    // Standard normal via Box-Muller; the pair's second member is cached.
    Scalar gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        Scalar u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const Scalar u2 = uniform();
        const Scalar r = std::sqrt(-2.0 * std::log(u1));
        const Scalar a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Scalar gaussian(Scalar mean, Scalar stddev) { return mean + stddev * gaussian(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent sub-stream, e.g. one per sample or per epoch. splitmix64
    // over (seed, stream) keeps sub-streams decorrelated.
    Rng derive(std::uint64_t stream) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    Scalar spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pointprompt
