#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stopfill {

// Deterministic sampling built on mt19937_64 with hand-rolled transforms, so
// the same seed yields the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return n ? engine_() % n : 0; }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(uniform_index(std::uint64_t(hi - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller, one value per call.
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mu + sigma * z;
    }

    // Marsaglia-Tsang; alpha > 0.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        double d = alpha - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

private:
    std::mt19937_64 engine_;
};

// Derives independent substreams from one run seed; `tag` separates concerns.
class SeedSequence {
public:
    explicit SeedSequence(std::uint64_t seed) : seed_(seed) {}

    Rng stream(std::uint64_t tag) const {
        std::uint64_t h = seed_ + tag * 0x9E3779B97F4A7C15ull;
        h ^= h >> 30;
        h *= 0xBF58476D1CE4E5B9ull;
        h ^= h >> 27;
        h *= 0x94D049BB133111EBull;
        h ^= h >> 31;
        return Rng(h);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace stopfill
