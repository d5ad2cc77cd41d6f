#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "backflash/config.hpp"
#include "backflash/errors.hpp"
#include "backflash/optical_path.hpp"
#include "backflash/rng.hpp"

namespace backflash {

// Dark-condition backflash emission versus APD dark current: flat at the
// monitor floor up to the onset, linear in current past the threshold, and a
// monotone C1 cubic bridge in between. Slope and floor defaults are
// synthetic placeholders — pick values for the device under study.
struct DarkCurrentCurve {
    double onset_na = 10.0;
    double linear_threshold_na = 100.0;
    double slope_cps_per_na = 12.0;
    double floor_cps = 100.0;

    void validate() const {
        detail::require(onset_na >= 0.0, "darkcurrent.onset_na must be non-negative");
        detail::require(linear_threshold_na > onset_na,
                        "darkcurrent.linear_threshold_na must exceed onset_na");
        detail::require(slope_cps_per_na >= 0.0,
                        "darkcurrent.slope_cps_per_na must be non-negative");
        detail::require(floor_cps >= 0.0, "darkcurrent.floor_cps must be non-negative");
    }

    bool operator==(const DarkCurrentCurve&) const = default;
};

inline double backflash_rate_model(double current_na, const DarkCurrentCurve& curve) {
    curve.validate();
    if (current_na < 0.0)
        throw ConfigError("backflash_rate_model: negative dark current");
    if (current_na <= curve.onset_na) return curve.floor_cps;
    if (current_na >= curve.linear_threshold_na)
        return curve.floor_cps + curve.slope_cps_per_na * current_na;
    const double linear_at =
        curve.floor_cps + curve.slope_cps_per_na * curve.linear_threshold_na;

    // Hermite segment from (onset, floor) to (threshold, linear law), with
    // derivatives 0 and slope; monotone since slope*(x1-x0) < y1-y0 always.
    const double x0 = curve.onset_na;
    const double x1 = curve.linear_threshold_na;
    const double h = x1 - x0;
    const double t = (current_na - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * curve.floor_cps + h01 * linear_at
           + h11 * h * curve.slope_cps_per_na;
}

struct SweepPoint {
    double current_na = 0.0;
    double rate_cps = 0.0;
};

// One counting run per current set-point. The excess over the floor rides
// the fiber back through the monitor (channel x detector efficiency); the
// floor is the monitor's own dark noise and is not attenuated.
inline std::vector<SweepPoint> simulate_dark_sweep(std::span<const double> currents_na,
                                                   const DarkCurrentCurve& curve,
                                                   double duration_s,
                                                   const MonitorParams& monitor,
                                                   std::uint64_t seed) {
    curve.validate();
    monitor.validate();
    if (duration_s <= 0.0)
        throw ConfigError("simulate_dark_sweep: duration must be positive");
    if (!std::is_sorted(currents_na.begin(), currents_na.end()))
        throw ConfigError("simulate_dark_sweep: currents must be ascending");

    const double kappa = detected_fraction(monitor);
    std::vector<SweepPoint> points;
    points.reserve(currents_na.size());
    for (std::size_t i = 0; i < currents_na.size(); ++i) {
        const double model = backflash_rate_model(currents_na[i], curve);
        const double mean_rate = curve.floor_cps + (model - curve.floor_cps) * kappa;
        Random rng(derive_seed(seed, seed_tag::dark_sweep, i));
        const auto counts = rng.poisson(mean_rate * duration_s);
        points.push_back({currents_na[i], static_cast<double>(counts) / duration_s});
    }
    return points;
}

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares over the points with x >= x_min.
inline FitResult linear_fit(std::span<const SweepPoint> points, double x_min) {
    std::vector<SweepPoint> sel;
    for (const auto& p : points)
        if (p.current_na >= x_min) sel.push_back(p);
    if (sel.size() < 2)
        throw StatisticsError("linear_fit: need at least two points above the threshold");

    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : sel) {
        mx += p.current_na;
        my += p.rate_cps;
    }
    mx /= static_cast<double>(sel.size());
    my /= static_cast<double>(sel.size());

    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : sel) {
        sxx += (p.current_na - mx) * (p.current_na - mx);
        sxy += (p.current_na - mx) * (p.rate_cps - my);
    }
    if (sxx == 0.0) throw StatisticsError("linear_fit: degenerate abscissa");

    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const auto& p : sel) {
        const double r = p.rate_cps - (fit.intercept + fit.slope * p.current_na);
        ss_res += r * r;
        ss_tot += (p.rate_cps - my) * (p.rate_cps - my);
    }
    fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return fit;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
    if (lo <= 0.0 || hi <= lo || n < 2)
        throw ConfigError("log_spaced: need 0 < lo < hi and at least two points");
    std::vector<double> grid(n);
    const double step = (std::log10(hi) - std::log10(lo)) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = std::pow(10.0, std::log10(lo) + step * static_cast<double>(i));
    grid.back() = hi;
    return grid;
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            std::span<const SweepPoint> points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "dark_current_nA,snspd_rate_cps\n";
    for (const auto& p : points)
        out << detail::format_double(p.current_na) << ','
            << detail::format_double(p.rate_cps) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace backflash
