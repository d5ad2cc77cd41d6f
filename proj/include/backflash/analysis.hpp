#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "backflash/apd_sim.hpp"
#include "backflash/config.hpp"
#include "backflash/errors.hpp"
#include "backflash/histogram.hpp"
#include "backflash/optical_path.hpp"
#include "backflash/stats.hpp"

namespace backflash {

struct LeakageEstimate {
    double n_backflash = 0.0;  // N_B: baseline-subtracted monitor counts
    double n_apd_valid = 0.0;  // N_A: laser-synchronized APD counts, dark removed
    MonitorParams monitor;
    double leakage = 0.0;      // P_L = N_B / (N_A * eta_det * eta_ch)
    double std_error = 0.0;
};

// Net backflash count of a baseline-subtracted histogram: the signed sum over
// the full period, minus any monitor dark counts known NOT to have cancelled
// in the subtraction. When the baseline run carries the same dark process
// (the usual on/off pair), the subtraction already removes dark in
// expectation and expected_dark_counts stays 0.
inline double count_backflashes(const Histogram& subtracted,
                                double expected_dark_counts = 0.0) {
    return static_cast<double>(subtracted.total()) - expected_dark_counts;
}

// Valid APD counts: clicks in laser-synchronized gates, with the expected
// dark contribution in those gates removed. Works from gate indices, not
// ground-truth click kinds, mirroring what a real counter can measure.
inline double count_valid_apd(std::span<const ApdEvent> events, const GateConfig& gate,
                              const ApdParams& apd, double duration_s) {
    gate.validate();
    apd.validate();
    if (duration_s <= 0.0) throw ConfigError("count_valid_apd: duration must be positive");
    const std::int64_t total_gates =
        static_cast<std::int64_t>(duration_s * gate.frequency_hz);
    const std::int64_t sync_gates =
        (total_gates + gate.illumination_divisor - 1) / gate.illumination_divisor;
    std::int64_t hits = 0;
    for (const auto& e : events)
        if (e.gate_index % gate.illumination_divisor == 0) ++hits;
    return static_cast<double>(hits)
           - apd.dark_count_prob_per_gate * static_cast<double>(sync_gates);
}

// P_L = N_B / (N_A eta_det eta_ch) with first-order error propagation.
// Variances default to the Poisson choice var = |count|; pass explicit
// variances when the counts come from a subtraction (var_on + var_off).
inline LeakageEstimate estimate_leakage(double n_backflash, double n_apd_valid,
                                        const MonitorParams& monitor,
                                        double var_backflash = -1.0,
                                        double var_apd = -1.0) {
    monitor.validate();
    const double kappa = detected_fraction(monitor);
    if (n_apd_valid <= 0.0)
        throw StatisticsError("estimate_leakage: no valid APD counts (N_A <= 0)");
    if (kappa <= 0.0)
        throw StatisticsError("estimate_leakage: monitor efficiency product is zero");
    if (var_backflash < 0.0) var_backflash = std::fabs(n_backflash);
    if (var_apd < 0.0) var_apd = n_apd_valid;

    LeakageEstimate est;
    est.n_backflash = n_backflash;
    est.n_apd_valid = n_apd_valid;
    est.monitor = monitor;
    est.leakage = n_backflash / (n_apd_valid * kappa);
    const double ratio = n_backflash / n_apd_valid;
    est.std_error =
        std::sqrt(var_backflash + ratio * ratio * var_apd) / (n_apd_valid * kappa);
    return est;
}

struct UniformityResult {
    double statistic = 0.0;
    std::int64_t dof = 0;
    double p_value = 0.0;
};

// Chi-squared test that the baseline-subtracted histogram is flat outside the
// excluded windows (folded picosecond intervals, e.g. the correlated-peak
// region). Per-bin variance comes from the raw on/off counts, so bins sitting
// under a backreflection are weighted by their true (inflated) variance.
inline UniformityResult uniform_floor_test(
    const Histogram& on, const Histogram& off,
    std::span<const std::pair<std::int64_t, std::int64_t>> exclude_windows_ps) {
    const Histogram sub = subtract_baseline(on, off);
    const double scale = on.duration_s / off.duration_s;

    std::vector<std::size_t> included;
    for (std::size_t i = 0; i < sub.counts.size(); ++i) {
        const std::int64_t lo = sub.bin_start_ps(i);
        const std::int64_t hi = lo + sub.bin_width_ps;
        bool excluded = false;
        for (const auto& [wlo, whi] : exclude_windows_ps)
            if (lo < whi && hi > wlo) { excluded = true; break; }
        if (!excluded) included.push_back(i);
    }
    if (included.size() < 2)
        throw StatisticsError("uniform_floor_test: fewer than two bins left to test");

    double mean = 0.0;
    for (auto i : included) mean += static_cast<double>(sub.counts[i]);
    mean /= static_cast<double>(included.size());

    double stat = 0.0;
    for (auto i : included) {
        const double var = std::max(
            static_cast<double>(on.counts[i])
                + scale * scale * static_cast<double>(off.counts[i]),
            1.0);
        const double d = static_cast<double>(sub.counts[i]) - mean;
        stat += d * d / var;
    }

    UniformityResult result;
    result.statistic = stat;
    result.dof = static_cast<std::int64_t>(included.size()) - 1;
    result.p_value = chi_squared_sf(stat, static_cast<double>(result.dof));
    return result;
}

} // namespace backflash
