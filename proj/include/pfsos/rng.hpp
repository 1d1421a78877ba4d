#pragma once

#include <cmath>
#include <cstdint>

namespace pfsos {

/// Counter-based random stream. Every draw is a pure function of
/// (key, counter), so a stream keyed by (seed, replication, patient) yields
/// the same numbers no matter which thread or in which order it is consumed.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t replication, std::uint64_t index)
        : key_(mix(mix(mix(seed ^ 0x243F6A8885A308D3ULL) ^ replication) ^ index)) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential with the given rate; +inf when rate is zero.
    double exponential(double rate) {
        return exponential_from(uniform(), rate);
    }

    static double exponential_from(double u, double rate) {
        if (rate <= 0.0) return INFINITY;
        return -std::log(u) / rate;
    }

    /// Standard normal via Box-Muller (one value per call, two uniforms).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Gamma(shape, rate) by Marsaglia-Tsang; shape < 1 uses the boost trick.
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0, 1.0);
            return g * std::pow(uniform(), 1.0 / shape) / rate;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = 0.0;
            double v = 0.0;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

    std::uint64_t draws() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace pfsos
