#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "backflash/config.hpp"
#include "backflash/errors.hpp"

namespace backflash {

// Shannon binary entropy in bits; h(0) = h(1) = 0 by continuity.
inline double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw ConfigError("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Lower bound on the secret fraction per gate:
//   R = max(0, q * P_click * [(1 - P_L)(1 - h(e)) - f h(e)])
// where the information leakage P_L scales only the sifted detections.
inline double secure_key_rate(double basis_prob, double click_prob, double info_leakage,
                              double qber, double ec_efficiency) {
    const double h = binary_entropy(qber);
    const double raw =
        basis_prob * click_prob * ((1.0 - info_leakage) * (1.0 - h) - ec_efficiency * h);
    return std::max(0.0, raw);
}

// Constant-leakage variant: the leakage term is charged per gate instead of
// per click, i.e. it is NOT multiplied by P_click. Far more punishing at long
// distance, where P_click sinks toward P_L.
inline double pessimistic_key_rate(double basis_prob, double click_prob,
                                   double info_leakage, double qber,
                                   double ec_efficiency) {
    const double h = binary_entropy(qber);
    const double raw = basis_prob
                       * (click_prob * (1.0 - h) - info_leakage * (1.0 - h)
                          - click_prob * ec_efficiency * h);
    return std::max(0.0, raw);
}

struct KeyRateParams {
    double basis_prob = 0.5;               // q
    double info_leakage = 0.0;             // P_L applied when no explicit list is given
    double ec_efficiency = 1.16;           // f
    double mean_photons = 0.1;             // mu
    double bob_efficiency = 0.17;
    double dark_count_prob_per_gate = 1.9e-6;
    double fiber_loss_db_per_km = 0.2;     // alpha
    double detector_error = 0.01;          // e_det
    double clock_rate_hz = 1e9;

    void validate() const {
        detail::require_prob(basis_prob, "keyrate.basis_prob");
        detail::require_prob(info_leakage, "keyrate.info_leakage");
        detail::require(ec_efficiency >= 1.0, "keyrate.ec_efficiency must be >= 1");
        detail::require(mean_photons >= 0.0, "keyrate.mean_photons must be non-negative");
        detail::require_prob(bob_efficiency, "keyrate.bob_efficiency");
        detail::require_prob(dark_count_prob_per_gate, "keyrate.dark_count_prob_per_gate");
        detail::require(fiber_loss_db_per_km >= 0.0,
                        "keyrate.fiber_loss_db_per_km must be non-negative");
        detail::require_prob(detector_error, "keyrate.detector_error");
        detail::require(clock_rate_hz > 0.0, "keyrate.clock_rate_hz must be positive");
    }

    bool operator==(const KeyRateParams&) const = default;
};

struct ChannelPoint {
    double click_prob = 0.0;
    double qber = 0.0;
};

// Attenuated-laser BB84 channel: transmission bob_eff * 10^(-alpha d / 10),
// Poissonian signal clicks, dark counts folded in, detector-error QBER.
inline ChannelPoint channel_model(const KeyRateParams& params, double distance_km) {
    params.validate();
    if (distance_km < 0.0) throw ConfigError("channel_model: negative distance");
    const double t = params.bob_efficiency
                     * std::pow(10.0, -params.fiber_loss_db_per_km * distance_km / 10.0);
    const double p_sig = 1.0 - std::exp(-params.mean_photons * t);
    const double p_dark = params.dark_count_prob_per_gate;
    ChannelPoint point;
    point.click_prob = 1.0 - (1.0 - p_sig) * (1.0 - p_dark);
    point.qber = point.click_prob > 0.0
                     ? (params.detector_error * p_sig + 0.5 * p_dark) / point.click_prob
                     : 0.0;
    return point;
}

struct KeyRatePoint {
    double distance_km = 0.0;
    double leakage = 0.0;
    double click_prob = 0.0;
    double qber = 0.0;
    double rate_per_gate = 0.0;
    double rate_per_second = 0.0;
};

struct KeyRateCurve {
    double leakage = 0.0;
    bool pessimistic = false;
    std::vector<KeyRatePoint> points;

    // Largest grid distance with a positive rate; -1 if the curve is dead.
    double cutoff_km() const {
        double cutoff = -1.0;
        for (const auto& p : points)
            if (p.rate_per_gate > 0.0) cutoff = p.distance_km;
        return cutoff;
    }
};

inline std::vector<KeyRateCurve> key_rate_vs_distance(const KeyRateParams& params,
                                                      std::span<const double> distances_km,
                                                      std::span<const double> leakages,
                                                      bool pessimistic = false) {
    params.validate();
    if (!std::is_sorted(distances_km.begin(), distances_km.end()))
        throw ConfigError("key_rate_vs_distance: distances must be ascending");
    for (double pl : leakages) detail::require_prob(pl, "leakage");

    std::vector<KeyRateCurve> curves;
    curves.reserve(leakages.size());
    for (double pl : leakages) {
        KeyRateCurve curve;
        curve.leakage = pl;
        curve.pessimistic = pessimistic;
        curve.points.reserve(distances_km.size());
        for (double d : distances_km) {
            const ChannelPoint ch = channel_model(params, d);
            KeyRatePoint pt;
            pt.distance_km = d;
            pt.leakage = pl;
            pt.click_prob = ch.click_prob;
            pt.qber = ch.qber;
            pt.rate_per_gate =
                pessimistic
                    ? pessimistic_key_rate(params.basis_prob, ch.click_prob, pl, ch.qber,
                                           params.ec_efficiency)
                    : secure_key_rate(params.basis_prob, ch.click_prob, pl, ch.qber,
                                      params.ec_efficiency);
            pt.rate_per_second = pt.rate_per_gate * params.clock_rate_hz;
            curve.points.push_back(pt);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

inline void write_curves_csv(const std::filesystem::path& path,
                             std::span<const KeyRateCurve> curves) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "distance_km,leakage,click_prob,qber,rate_per_gate,rate_per_second\n";
    for (const auto& curve : curves)
        for (const auto& p : curve.points)
            out << detail::format_double(p.distance_km) << ','
                << detail::format_double(p.leakage) << ','
                << detail::format_double(p.click_prob) << ','
                << detail::format_double(p.qber) << ','
                << detail::format_double(p.rate_per_gate) << ','
                << detail::format_double(p.rate_per_second) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace backflash
