#ifndef PERMAFUSE_RNG_HPP
#define PERMAFUSE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace permafuse {

/// Seeded random stream. Wraps mt19937_64 but derives doubles by explicit
/// bit manipulation so that sequences are reproducible independent of the
/// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (deterministic, no cached spare).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Derive an independent stream for a named sub-task.
    Rng fork(std::uint64_t tag) {
        std::uint64_t s = eng_() ^ (tag * 0x9e3779b97f4a7c15ull);
        return Rng(s);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace permafuse

#endif
