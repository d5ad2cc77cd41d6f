#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "backflash/analysis.hpp"
#include "backflash/apd_sim.hpp"
#include "backflash/config.hpp"
#include "backflash/config_io.hpp"
#include "backflash/histogram.hpp"
#include "backflash/optical_path.hpp"
#include "backflash/timetag.hpp"

namespace backflash {

// Everything produced by one simulated acquisition pair: the APD-on run
// (clicks + emissions + monitor tags), the APD-off baseline, and the
// leakage analysis built from them.
struct RunArtifacts {
    ApdSimResult sim;
    std::vector<MonitorEvent> monitor_on;
    std::vector<MonitorEvent> monitor_off;
    Histogram hist_on;
    Histogram hist_off;
    Histogram hist_subtracted;
    LeakageEstimate leakage;
};

inline std::vector<std::int64_t> event_timestamps(std::span<const MonitorEvent> events) {
    std::vector<std::int64_t> ts;
    ts.reserve(events.size());
    for (const auto& e : events) ts.push_back(e.timestamp_ps);
    return ts;
}

// Analysis half of the pipeline, reusable on deserialized tag streams:
// fold, subtract, count, estimate.
inline RunArtifacts analyze_tags(std::vector<std::int64_t> monitor_on_ts,
                                 std::vector<std::int64_t> monitor_off_ts,
                                 std::vector<ApdEvent> apd_clicks,
                                 const ExperimentConfig& cfg,
                                 double off_duration_s = 0.0) {
    cfg.validate();
    if (off_duration_s <= 0.0) off_duration_s = cfg.duration_s;
    RunArtifacts art;
    art.sim.clicks = std::move(apd_clicks);
    const std::int64_t period = cfg.gate.laser_period_ps();
    art.hist_on = fold_histogram(monitor_on_ts, period, cfg.bin_width_ps, cfg.duration_s);
    art.hist_off = fold_histogram(monitor_off_ts, period, cfg.bin_width_ps, off_duration_s);
    art.hist_subtracted = subtract_baseline(art.hist_on, art.hist_off);

    // Monitor dark and reflections cancel in the subtraction, so no further
    // dark correction applies to N_B. Its variance is the sum of the raw
    // totals (variance of a difference of independent Poisson histograms).
    const double n_b = count_backflashes(art.hist_subtracted, 0.0);
    const double scale = cfg.duration_s / off_duration_s;
    const double var_b = static_cast<double>(art.hist_on.total())
                         + scale * scale * static_cast<double>(art.hist_off.total());

    const double n_a =
        count_valid_apd(art.sim.clicks, cfg.gate, cfg.apd, cfg.duration_s);
    const std::int64_t total_gates =
        static_cast<std::int64_t>(cfg.duration_s * cfg.gate.frequency_hz);
    const std::int64_t sync_gates =
        (total_gates + cfg.gate.illumination_divisor - 1) / cfg.gate.illumination_divisor;
    const double expected_dark =
        cfg.apd.dark_count_prob_per_gate * static_cast<double>(sync_gates);
    const double var_a = n_a + expected_dark; // variance of the raw sync-gate count

    art.leakage = estimate_leakage(n_b, n_a, cfg.monitor, var_b, var_a);
    return art;
}

// Full closed loop: simulate the APD, run both monitor acquisitions, analyze.
inline RunArtifacts run_experiment(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    ApdSimResult sim =
        simulate_apd(cfg.gate, cfg.apd, cfg.backflash, cfg.duration_s,
                     derive_seed(cfg.seed, seed_tag::run_on), threads);
    const PulseTrain pulses = pulse_train_for(cfg.gate, cfg.duration_s);
    const double jitter_ps = cfg.backflash.peak_sigma_ns * kPicosecondsPerNanosecond;

    std::vector<MonitorEvent> on =
        propagate(sim.backflash_emissions_ps, pulses, cfg.reflections, cfg.monitor, true,
                  cfg.duration_s, derive_seed(cfg.seed, seed_tag::run_on), jitter_ps);
    std::vector<MonitorEvent> off =
        propagate({}, pulses, cfg.reflections, cfg.monitor, false, cfg.duration_s,
                  derive_seed(cfg.seed, seed_tag::run_off), jitter_ps);

    RunArtifacts art = analyze_tags(event_timestamps(on), event_timestamps(off),
                                    std::move(sim.clicks), cfg);
    art.sim.backflash_emissions_ps = std::move(sim.backflash_emissions_ps);
    art.monitor_on = std::move(on);
    art.monitor_off = std::move(off);
    return art;
}

// Leakage as a function of APD detection efficiency, full pipeline per point.
// Each point gets its own derived seed so the error bars are honest.
inline std::vector<std::pair<double, LeakageEstimate>> sweep_efficiency(
    const ExperimentConfig& base, std::span<const double> efficiencies,
    double duration_s, int threads = 1) {
    std::vector<std::pair<double, LeakageEstimate>> points;
    points.reserve(efficiencies.size());
    for (std::size_t i = 0; i < efficiencies.size(); ++i) {
        ExperimentConfig cfg = base;
        cfg.apd.detection_efficiency = efficiencies[i];
        cfg.duration_s = duration_s;
        cfg.seed = derive_seed(base.seed, seed_tag::eff_sweep, i);
        points.emplace_back(efficiencies[i], run_experiment(cfg, threads).leakage);
    }
    return points;
}

inline void write_efficiency_csv(
    const std::filesystem::path& path,
    std::span<const std::pair<double, LeakageEstimate>> points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "efficiency,leakage,std_error,n_backflash,n_apd_valid\n";
    for (const auto& [eff, est] : points)
        out << detail::format_double(eff) << ',' << detail::format_double(est.leakage)
            << ',' << detail::format_double(est.std_error) << ','
            << detail::format_double(est.n_backflash) << ','
            << detail::format_double(est.n_apd_valid) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "bin_start_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << h.bin_start_ps(i) << ',' << h.counts[i] << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

// Self-describing summary of one run: the exact config, where the outputs
// went, and the headline statistics. Re-running the embedded config
// reproduces the statistics bit for bit.
struct RunRecord {
    FullConfig config;
    std::map<std::string, std::string> outputs; // label -> path
    double n_backflash = 0.0;
    double n_apd_valid = 0.0;
    double leakage = 0.0;
    double std_error = 0.0;
};

inline std::string render_run_record(const RunRecord& record) {
    std::ostringstream out;
    out << render_config(record.config);
    for (const auto& [label, path] : record.outputs)
        out << "output." << label << " = " << path << '\n';
    out << "result.n_backflash = " << detail::format_double_exact(record.n_backflash)
        << '\n'
        << "result.n_apd_valid = " << detail::format_double_exact(record.n_apd_valid)
        << '\n'
        << "result.leakage = " << detail::format_double_exact(record.leakage) << '\n'
        << "result.std_error = " << detail::format_double_exact(record.std_error) << '\n';
    return out.str();
}

inline RunRecord parse_run_record(const std::string& text) {
    std::ostringstream config_text;
    RunRecord record;
    std::istringstream in(text);
    std::string line;
    auto value_of = [](const std::string& l) {
        return detail::trim(l.substr(l.find('=') + 1));
    };
    auto key_of = [](const std::string& l) {
        return detail::trim(l.substr(0, l.find('=')));
    };
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.find('=') == std::string::npos) {
            config_text << line << '\n';
            continue;
        }
        const std::string key = key_of(t);
        if (key.rfind("output.", 0) == 0) {
            record.outputs[key.substr(7)] = value_of(t);
        } else if (key.rfind("result.", 0) == 0) {
            const double v = detail::parse_double(key, value_of(t));
            if (key == "result.n_backflash") record.n_backflash = v;
            else if (key == "result.n_apd_valid") record.n_apd_valid = v;
            else if (key == "result.leakage") record.leakage = v;
            else if (key == "result.std_error") record.std_error = v;
            else throw ConfigError("unknown run-record key: " + key);
        } else {
            config_text << line << '\n';
        }
    }
    record.config = parse_config(config_text.str());
    return record;
}

} // namespace backflash
