#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "backflash/config.hpp"
#include "backflash/errors.hpp"
#include "backflash/rng.hpp"

namespace backflash {

// Laser pulse train as a descriptor; pulses sit at start + i*period for
// i in [0, count). Materializing 1.5e8 pulse timestamps would be pointless.
struct PulseTrain {
    std::int64_t start_ps = 0;
    std::int64_t period_ps = 0;
    std::int64_t count = 0;
};

inline PulseTrain pulse_train_for(const GateConfig& gate, double duration_s) {
    PulseTrain train;
    train.start_ps = 0;
    train.period_ps = gate.laser_period_ps();
    train.count = static_cast<std::int64_t>(duration_s * gate.frequency_hz)
                  / gate.illumination_divisor;
    return train;
}

// Ground-truth provenance of a monitor event. Analysis never reads this;
// it exists so simulation oracles can check per-stream statistics.
enum class Origin : std::uint8_t { Backflash = 0, Backreflection = 1, Dark = 2 };

struct MonitorEvent {
    std::int64_t timestamp_ps = 0;
    Origin origin = Origin::Dark;
};

inline double detected_fraction(const MonitorParams& monitor) {
    monitor.validate();
    return monitor.detector_efficiency * monitor.channel_transmission;
}

// Turns backflash emissions plus the pulse train into the monitor's time-tag
// stream: emission thinning by channel x detector efficiency, per-pulse
// backreflections at fixed delays, and monitor dark counts. Reflections are
// smeared by a Gaussian of width jitter_sigma_ps so folded histograms show
// finite-width peaks; pass 0 for delta-timed reflections.
inline std::vector<MonitorEvent> propagate(std::span<const std::int64_t> emissions_ps,
                                           const PulseTrain& pulses,
                                           std::span<const ReflectionPoint> reflections,
                                           const MonitorParams& monitor, bool apd_active,
                                           double duration_s, std::uint64_t seed,
                                           double jitter_sigma_ps = 0.0) {
    monitor.validate();
    for (const auto& r : reflections) r.validate();
    if (duration_s <= 0.0) throw ConfigError("propagate: duration must be positive");
    if (!std::is_sorted(emissions_ps.begin(), emissions_ps.end()))
        throw IoError("propagate: emission stream is not sorted");

    const std::int64_t duration_ps = ps_from_s(duration_s);
    std::vector<MonitorEvent> out;

    auto keep = [&](std::int64_t ts, Origin origin) {
        if (ts >= 0 && ts < duration_ps) out.push_back({ts, origin});
    };

    if (apd_active) {
        Random rng(derive_seed(seed, seed_tag::mon_thin));
        const double kappa = detected_fraction(monitor);
        for (auto ts : emissions_ps)
            if (rng.bernoulli(kappa)) keep(ts, Origin::Backflash);
    }

    for (std::size_t i = 0; i < reflections.size(); ++i) {
        const auto& refl = reflections[i];
        if (refl.return_prob <= 0.0 || pulses.count == 0) continue;
        Random rng(derive_seed(seed, seed_tag::mon_reflect, i));
        const double delay_ps = refl.delay_ns * kPicosecondsPerNanosecond;
        std::int64_t pulse = -1;
        while (true) {
            std::int64_t skip = rng.geometric_skip(refl.return_prob);
            if (skip > pulses.count - 1 - pulse) break;
            pulse += skip;
            double smear = jitter_sigma_ps > 0.0 ? rng.normal(0.0, jitter_sigma_ps) : 0.0;
            keep(pulses.start_ps + pulse * pulses.period_ps
                     + static_cast<std::int64_t>(std::llround(delay_ps + smear)),
                 Origin::Backreflection);
        }
    }

    if (monitor.dark_rate_cps > 0.0) {
        Random rng(derive_seed(seed, seed_tag::mon_dark));
        const double mean_gap_ps = kPicosecondsPerSecond / monitor.dark_rate_cps;
        double t = 0.0;
        while (true) {
            t += rng.exponential() * mean_gap_ps;
            if (t >= static_cast<double>(duration_ps)) break;
            keep(static_cast<std::int64_t>(t), Origin::Dark);
        }
    }

    std::sort(out.begin(), out.end(), [](const MonitorEvent& a, const MonitorEvent& b) {
        return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                                : a.origin < b.origin;
    });
    return out;
}

} // namespace backflash
