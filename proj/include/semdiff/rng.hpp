#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace semdiff {

/// Seeded generator with platform-independent draws. The raw stream is
/// std::mt19937_64 (its sequence is fixed by the standard); the real-valued
/// mappings below avoid std::uniform_real_distribution, whose output is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is irrelevant for the tiny n used here
        return eng_() % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace semdiff
