#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "backflash/errors.hpp"

namespace backflash {

inline constexpr double kPicosecondsPerSecond = 1e12;
inline constexpr double kPicosecondsPerNanosecond = 1e3;

inline std::int64_t ps_from_ns(double ns) {
    return static_cast<std::int64_t>(std::llround(ns * kPicosecondsPerNanosecond));
}

inline std::int64_t ps_from_s(double s) {
    return static_cast<std::int64_t>(std::llround(s * kPicosecondsPerSecond));
}

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}
inline void require_prob(double p, const std::string& name) {
    require(p >= 0.0 && p <= 1.0, name + " must lie in [0, 1], got " + std::to_string(p));
}

// Fixed-width %g rendering; keeps CSV output byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
} // namespace detail

// Detector gate train. The gate period must be an integer number of
// picoseconds so that event timestamps and gate indices stay exact.
struct GateConfig {
    double frequency_hz = 1.0e9;
    double duty_cycle = 0.5;
    std::int64_t illumination_divisor = 64; // laser fires every k-th gate

    std::int64_t gate_period_ps() const {
        return static_cast<std::int64_t>(std::llround(kPicosecondsPerSecond / frequency_hz));
    }
    std::int64_t laser_period_ps() const { return illumination_divisor * gate_period_ps(); }
    std::int64_t on_width_ps() const {
        auto w = static_cast<std::int64_t>(duty_cycle * static_cast<double>(gate_period_ps()));
        return w < 1 ? 1 : w;
    }

    void validate() const {
        detail::require(frequency_hz > 0.0, "gate.frequency_hz must be positive");
        detail::require(duty_cycle > 0.0 && duty_cycle < 1.0,
                        "gate.duty_cycle must lie strictly inside (0, 1)");
        detail::require(illumination_divisor >= 1, "gate.illumination_divisor must be >= 1");
        double exact = kPicosecondsPerSecond / frequency_hz;
        detail::require(std::fabs(exact - std::round(exact)) < 1e-6 && exact >= 1.0,
                        "gate.frequency_hz must give an integer gate period in picoseconds");
    }

    bool operator==(const GateConfig&) const = default;
};

struct ApdParams {
    double detection_efficiency = 0.17;
    double dark_count_prob_per_gate = 1.9e-6;
    double afterpulse_prob_total = 0.05;
    double afterpulse_decay_ns = 50.0;
    double mean_photons_per_pulse = 0.1; // mu of the attenuated laser

    void validate() const {
        detail::require_prob(detection_efficiency, "apd.detection_efficiency");
        detail::require_prob(dark_count_prob_per_gate, "apd.dark_count_prob_per_gate");
        detail::require_prob(afterpulse_prob_total, "apd.afterpulse_prob_total");
        detail::require(afterpulse_decay_ns > 0.0, "apd.afterpulse_decay_ns must be positive");
        detail::require(mean_photons_per_pulse >= 0.0,
                        "apd.mean_photons_per_pulse must be non-negative");
    }

    bool operator==(const ApdParams&) const = default;
};

// Click-conditional emission. Temporal profile relative to the causing click:
// a narrow Gaussian peak at peak_delay_ns (the component that survives
// folding) plus a uniform spread over one laser period.
struct BackflashParams {
    double emission_prob = 5e-3;  // per click, coupled into the fiber
    double peak_weight = 0.4;
    double peak_delay_ns = 49.125;
    double peak_sigma_ns = 0.2;
    double uniform_fraction = 0.6;

    void validate() const {
        detail::require_prob(emission_prob, "backflash.emission_prob");
        detail::require_prob(peak_weight, "backflash.peak_weight");
        detail::require_prob(uniform_fraction, "backflash.uniform_fraction");
        detail::require(std::fabs(peak_weight + uniform_fraction - 1.0) < 1e-9,
                        "backflash.peak_weight + backflash.uniform_fraction must equal 1");
        detail::require(peak_delay_ns >= 0.0, "backflash.peak_delay_ns must be non-negative");
        detail::require(peak_sigma_ns >= 0.0, "backflash.peak_sigma_ns must be non-negative");
    }

    bool operator==(const BackflashParams&) const = default;
};

// One passive reflector in the optical path. delay is the full round trip
// from laser emission to monitor detection; return_prob already folds in the
// reflectance and the monitor detection efficiency.
struct ReflectionPoint {
    double delay_ns = 0.0;
    double return_prob = 0.0; // per laser pulse, with all losses folded in

    void validate() const {
        detail::require(delay_ns >= 0.0, "reflection delay_ns must be non-negative");
        detail::require_prob(return_prob, "reflection return_prob");
    }

    bool operator==(const ReflectionPoint&) const = default;
};

struct MonitorParams {
    double detector_efficiency = 0.80;  // eta_det
    double channel_transmission = 0.78; // eta_ch
    double dark_rate_cps = 100.0;

    void validate() const {
        detail::require_prob(detector_efficiency, "monitor.detector_efficiency");
        detail::require_prob(channel_transmission, "monitor.channel_transmission");
        detail::require(dark_rate_cps >= 0.0, "monitor.dark_rate_cps must be non-negative");
    }

    bool operator==(const MonitorParams&) const = default;
};

// Full parameterization of one simulated acquisition pair (APD on + APD off).
struct ExperimentConfig {
    GateConfig gate;
    ApdParams apd;
    BackflashParams backflash;
    std::vector<ReflectionPoint> reflections;
    MonitorParams monitor;
    double duration_s = 10.0;
    std::uint64_t seed = 0; // no wall-clock fallback; must come from config
    std::int64_t bin_width_ps = 250;

    void validate() const {
        gate.validate();
        apd.validate();
        backflash.validate();
        for (const auto& r : reflections) r.validate();
        monitor.validate();
        detail::require(duration_s > 0.0, "run.duration_s must be positive");
        detail::require(bin_width_ps >= 1, "run.bin_width_ps must be >= 1");
        detail::require(gate.laser_period_ps() % bin_width_ps == 0,
                        "run.bin_width_ps must divide the laser period ("
                        + std::to_string(gate.laser_period_ps()) + " ps)");
    }

    bool operator==(const ExperimentConfig&) const = default;
};

} // namespace backflash
