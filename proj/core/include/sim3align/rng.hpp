#pragma once

#include <cstdint>
#include <random>

namespace sim3align {

/// Deterministic random stream: a std::mt19937_64 engine (bit-exact by the
/// standard) with our own output transforms, since the standard library's
/// distributions are implementation-defined. Identical seeds therefore give
/// identical streams on every platform. Stream version: 1.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t uniform_int(std::uint64_t bound) {
        auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
        return v < bound ? v : bound - 1;
    }

    /// Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

    double normal(double sigma) { return sigma * normal(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sim3align
