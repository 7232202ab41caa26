#pragma once

#include <cmath>
#include <cstdint>

namespace tp {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because every step is
// integer arithmetic with a fully pinned algorithm, so the same seed
// produces the same stream on every platform. Streams are split by
// hashing (seed, key) pairs, which keeps per-sample generation
// independent of generation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_below(
                        static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    // Standard normal via Box-Muller; both draws consumed in fixed order.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Derived independent stream for (seed, key).
    Rng split(std::uint64_t key) const {
        Rng mix(state_ ^ 0x5851f42d4c957f2dull);
        mix.state_ += key * 0x14057b7ef767814full;
        return Rng(mix.next_u64());
    }

private:
    std::uint64_t state_;
};

}  // namespace tp
