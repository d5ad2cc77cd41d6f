#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace backflash {

// splitmix64; used to derive independent stream seeds from (master seed, tag).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    return splitmix64(splitmix64(master) ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_seed(derive_seed(master, tag_a), tag_b);
}

// Stream tags. Fixed constants so that every random substream of a run is
// reproducible from the single user-facing seed.
namespace seed_tag {
inline constexpr std::uint64_t apd_signal    = 0x41u;
inline constexpr std::uint64_t apd_dark      = 0x42u;
inline constexpr std::uint64_t apd_click     = 0x43u; // afterpulse/backflash draws
inline constexpr std::uint64_t mon_thin      = 0x51u;
inline constexpr std::uint64_t mon_reflect   = 0x52u;
inline constexpr std::uint64_t mon_dark      = 0x53u;
inline constexpr std::uint64_t run_on        = 0x61u;
inline constexpr std::uint64_t run_off       = 0x62u;
inline constexpr std::uint64_t dark_sweep    = 0x71u;
inline constexpr std::uint64_t eff_sweep     = 0x72u;
} // namespace seed_tag

// mt19937_64 with hand-rolled variate transforms. The standard distribution
// classes are implementation-defined, so all transforms live here to keep
// seeded runs byte-reproducible across toolchains.
class Random {
public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    // standard normal, Box-Muller with spare caching
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Exp(1)
    double exponential() { return -std::log(1.0 - uniform()); }

    // Number of Bernoulli(p) slots to advance until the next success, >= 1.
    // Returns int64 max when p == 0 (no success ever).
    std::int64_t geometric_skip(double p) {
        if (p >= 1.0) return 1;
        if (p <= 0.0) return std::numeric_limits<std::int64_t>::max();
        double u = 1.0 - uniform(); // (0, 1]
        double k = std::floor(std::log(u) / std::log1p(-p));
        if (k >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
        return 1 + static_cast<std::int64_t>(k);
    }

    // Poisson(lambda) by summing unit-exponential arrival gaps.
    std::int64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        std::int64_t k = 0;
        double acc = exponential();
        while (acc <= lambda) {
            ++k;
            acc += exponential();
        }
        return k;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace backflash
