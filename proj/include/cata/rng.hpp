#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cata {

/// Deterministic random source. All draws are derived from mt19937_64 with
/// explicit transforms so a seed reproduces the exact same stream regardless
/// of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// N(0, sigma) via Box-Muller.
    double normal(double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a) * sigma;
    }

    /// Uniform index in [0, n); n must be > 0.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    /// Fisher-Yates shuffle with this engine's draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cata
