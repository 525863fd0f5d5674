#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fixq {

/// Seeded generator with platform-independent distributions (the standard
/// library distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double laplace(double scale = 1.0) {
        const double u = uniform() - 0.5;
        const double mag = -scale * std::log(1.0 - 2.0 * std::fabs(u));
        return u < 0.0 ? -mag : mag;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fixq
