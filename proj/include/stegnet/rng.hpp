// Seedable RNG with portable, platform-independent output. std:: distributions
// vary between standard library implementations, so everything that must be
// reproducible (weight init, message sampling, crops, filler bits) goes
// through this one. splitmix64 core.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace stegnet {

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    float uniform() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

    double uniform_f64() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Fair coin flip, 0.0f or 1.0f.
    float coin() { return static_cast<float>(next_u64() >> 63); }

    // Standard normal via Box-Muller (no cached second value; keeps the
    // stream position a pure function of call count).
    float normal() {
        double u1 = uniform_f64();
        double u2 = uniform_f64();
        while (u1 <= 0.0) u1 = uniform_f64();
        return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    }

    // Uniform integer in [0, n), n >= 1. Multiply-shift bound, bias-free
    // enough for shuffles at these sizes.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Mixes stream labels into a seed so independent RNG streams can be derived
// from (seed, epoch, step, ...) tuples deterministically.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) { return mix_seed(mix_seed(a, b), c); }
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix_seed(mix_seed(a, b, c), d);
}

} // namespace stegnet
