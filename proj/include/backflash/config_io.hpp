#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "backflash/config.hpp"
#include "backflash/darkcurrent.hpp"
#include "backflash/errors.hpp"
#include "backflash/keyrate.hpp"

namespace backflash {

// Distance grid and leakage set for the key-rate sweep.
struct KeyRateSweep {
    double distance_min_km = 0.0;
    double distance_max_km = 200.0;
    double distance_step_km = 1.0;
    std::vector<double> leakages{0.0, 5e-3, 5e-2};

    void validate() const {
        detail::require(distance_min_km >= 0.0, "keyrate.distance_min_km must be >= 0");
        detail::require(distance_max_km > distance_min_km,
                        "keyrate.distance_max_km must exceed distance_min_km");
        detail::require(distance_step_km > 0.0, "keyrate.distance_step_km must be > 0");
        detail::require(!leakages.empty(), "keyrate.leakages must not be empty");
        for (double pl : leakages) detail::require_prob(pl, "keyrate.leakages entry");
    }

    std::vector<double> distances() const {
        validate();
        std::vector<double> grid;
        for (double d = distance_min_km; d <= distance_max_km + 1e-9;
             d += distance_step_km)
            grid.push_back(d);
        return grid;
    }

    bool operator==(const KeyRateSweep&) const = default;
};

struct DarkSweepConfig {
    double current_min_na = 1.0;
    double current_max_na = 1000.0;
    std::int64_t points = 31;
    double duration_s = 10.0;
    double fit_threshold_na = 100.0;

    void validate() const {
        detail::require(current_min_na > 0.0, "darksweep.current_min_na must be > 0");
        detail::require(current_max_na > current_min_na,
                        "darksweep.current_max_na must exceed current_min_na");
        detail::require(points >= 2, "darksweep.points must be >= 2");
        detail::require(duration_s > 0.0, "darksweep.duration_s must be > 0");
        detail::require(fit_threshold_na >= 0.0, "darksweep.fit_threshold_na must be >= 0");
    }

    bool operator==(const DarkSweepConfig&) const = default;
};

struct EfficiencySweepConfig {
    std::vector<double> efficiencies{0.025, 0.05, 0.075, 0.10, 0.125,
                                     0.15,  0.175, 0.20, 0.225, 0.25};
    double duration_s = 2.0;

    void validate() const {
        detail::require(!efficiencies.empty(), "sweep.efficiencies must not be empty");
        for (double e : efficiencies)
            detail::require(e > 0.0 && e <= 1.0,
                            "sweep.efficiencies entries must lie in (0, 1]");
        detail::require(duration_s > 0.0, "sweep.duration_s must be > 0");
    }

    bool operator==(const EfficiencySweepConfig&) const = default;
};

// Everything a config file can carry. seed_set records whether run.seed was
// present; a seed must come either from the file or from the command line.
struct FullConfig {
    ExperimentConfig experiment;
    KeyRateParams keyrate;
    KeyRateSweep keyrate_sweep;
    DarkCurrentCurve dark_curve;
    DarkSweepConfig dark_sweep;
    EfficiencySweepConfig efficiency_sweep;
    bool seed_set = false;

    void validate() const {
        experiment.validate();
        keyrate.validate();
        keyrate_sweep.validate();
        dark_curve.validate();
        dark_sweep.validate();
        efficiency_sweep.validate();
    }

    bool operator==(const FullConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// key = value lines; # starts a comment line; keys are unique.
inline std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno)
                              + " has no '=': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + " has empty key");
        if (!kv.emplace(key, value).second)
            throw ConfigError("duplicate config key: " + key);
    }
    return kv;
}

inline double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config key " + key + ": not a number: '" + value + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config key " + key + ": not an integer: '" + value + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    if (!value.empty() && value.front() == '-')
        throw ConfigError("config key " + key + ": must be non-negative: '" + value + "'");
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config key " + key + ": not an integer: '" + value + "'");
    return v;
}

inline std::vector<double> parse_double_list(const std::string& key,
                                             const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
}

// Pulls typed values out of the key map and remembers what was consumed, so
// that leftovers can be reported as unknown keys (silent defaults would hide
// physics mistakes).
class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    void get(const std::string& key, double& slot) {
        if (auto v = take(key)) slot = parse_double(key, *v);
    }
    void get(const std::string& key, std::int64_t& slot) {
        if (auto v = take(key)) slot = parse_int(key, *v);
    }
    void get(const std::string& key, std::vector<double>& slot) {
        if (auto v = take(key)) slot = parse_double_list(key, *v);
    }
    std::optional<std::uint64_t> get_uint(const std::string& key) {
        if (auto v = take(key)) return parse_uint(key, *v);
        return std::nullopt;
    }

    void finish() const {
        for (const auto& [key, value] : kv_)
            if (!consumed_.count(key)) throw ConfigError("unknown config key: " + key);
    }

private:
    std::optional<std::string> take(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        consumed_.insert(key);
        return it->second;
    }

    std::map<std::string, std::string> kv_;
    std::set<std::string> consumed_;
};

inline std::string format_double_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double_exact(values[i]);
    }
    return out;
}

} // namespace detail

inline FullConfig parse_config(const std::string& text) {
    detail::ConfigReader reader(detail::parse_kv(text));
    FullConfig cfg;

    auto& exp = cfg.experiment;
    reader.get("gate.frequency_hz", exp.gate.frequency_hz);
    reader.get("gate.duty_cycle", exp.gate.duty_cycle);
    reader.get("gate.illumination_divisor", exp.gate.illumination_divisor);

    reader.get("apd.detection_efficiency", exp.apd.detection_efficiency);
    reader.get("apd.dark_count_prob_per_gate", exp.apd.dark_count_prob_per_gate);
    reader.get("apd.afterpulse_prob_total", exp.apd.afterpulse_prob_total);
    reader.get("apd.afterpulse_decay_ns", exp.apd.afterpulse_decay_ns);
    reader.get("apd.mean_photons_per_pulse", exp.apd.mean_photons_per_pulse);

    reader.get("backflash.emission_prob", exp.backflash.emission_prob);
    reader.get("backflash.peak_weight", exp.backflash.peak_weight);
    reader.get("backflash.peak_delay_ns", exp.backflash.peak_delay_ns);
    reader.get("backflash.peak_sigma_ns", exp.backflash.peak_sigma_ns);
    reader.get("backflash.uniform_fraction", exp.backflash.uniform_fraction);

    for (std::size_t i = 0;; ++i) {
        const std::string prefix = "reflection." + std::to_string(i) + ".";
        if (!reader.has(prefix + "delay_ns") && !reader.has(prefix + "return_prob")) break;
        ReflectionPoint pt;
        if (!reader.has(prefix + "delay_ns") || !reader.has(prefix + "return_prob"))
            throw ConfigError("reflection " + std::to_string(i)
                              + " needs both delay_ns and return_prob");
        reader.get(prefix + "delay_ns", pt.delay_ns);
        reader.get(prefix + "return_prob", pt.return_prob);
        exp.reflections.push_back(pt);
    }

    reader.get("monitor.detector_efficiency", exp.monitor.detector_efficiency);
    reader.get("monitor.channel_transmission", exp.monitor.channel_transmission);
    reader.get("monitor.dark_rate_cps", exp.monitor.dark_rate_cps);

    reader.get("run.duration_s", exp.duration_s);
    reader.get("run.bin_width_ps", exp.bin_width_ps);
    if (auto seed = reader.get_uint("run.seed")) {
        exp.seed = *seed;
        cfg.seed_set = true;
    }

    reader.get("keyrate.basis_prob", cfg.keyrate.basis_prob);
    reader.get("keyrate.info_leakage", cfg.keyrate.info_leakage);
    reader.get("keyrate.ec_efficiency", cfg.keyrate.ec_efficiency);
    reader.get("keyrate.mean_photons", cfg.keyrate.mean_photons);
    reader.get("keyrate.bob_efficiency", cfg.keyrate.bob_efficiency);
    reader.get("keyrate.dark_count_prob_per_gate", cfg.keyrate.dark_count_prob_per_gate);
    reader.get("keyrate.fiber_loss_db_per_km", cfg.keyrate.fiber_loss_db_per_km);
    reader.get("keyrate.detector_error", cfg.keyrate.detector_error);
    reader.get("keyrate.clock_rate_hz", cfg.keyrate.clock_rate_hz);
    reader.get("keyrate.distance_min_km", cfg.keyrate_sweep.distance_min_km);
    reader.get("keyrate.distance_max_km", cfg.keyrate_sweep.distance_max_km);
    reader.get("keyrate.distance_step_km", cfg.keyrate_sweep.distance_step_km);
    reader.get("keyrate.leakages", cfg.keyrate_sweep.leakages);

    reader.get("darkcurrent.onset_na", cfg.dark_curve.onset_na);
    reader.get("darkcurrent.linear_threshold_na", cfg.dark_curve.linear_threshold_na);
    reader.get("darkcurrent.slope_cps_per_na", cfg.dark_curve.slope_cps_per_na);
    reader.get("darkcurrent.floor_cps", cfg.dark_curve.floor_cps);

    reader.get("darksweep.current_min_na", cfg.dark_sweep.current_min_na);
    reader.get("darksweep.current_max_na", cfg.dark_sweep.current_max_na);
    reader.get("darksweep.points", cfg.dark_sweep.points);
    reader.get("darksweep.duration_s", cfg.dark_sweep.duration_s);
    reader.get("darksweep.fit_threshold_na", cfg.dark_sweep.fit_threshold_na);

    reader.get("sweep.efficiencies", cfg.efficiency_sweep.efficiencies);
    reader.get("sweep.duration_s", cfg.efficiency_sweep.duration_s);

    reader.finish();
    cfg.validate();
    return cfg;
}

inline std::string render_config(const FullConfig& cfg) {
    using detail::format_double_exact;
    std::ostringstream out;
    const auto& exp = cfg.experiment;
    out << "gate.frequency_hz = " << format_double_exact(exp.gate.frequency_hz) << '\n'
        << "gate.duty_cycle = " << format_double_exact(exp.gate.duty_cycle) << '\n'
        << "gate.illumination_divisor = " << exp.gate.illumination_divisor << '\n'
        << "apd.detection_efficiency = " << format_double_exact(exp.apd.detection_efficiency)
        << '\n'
        << "apd.dark_count_prob_per_gate = "
        << format_double_exact(exp.apd.dark_count_prob_per_gate) << '\n'
        << "apd.afterpulse_prob_total = "
        << format_double_exact(exp.apd.afterpulse_prob_total) << '\n'
        << "apd.afterpulse_decay_ns = " << format_double_exact(exp.apd.afterpulse_decay_ns)
        << '\n'
        << "apd.mean_photons_per_pulse = "
        << format_double_exact(exp.apd.mean_photons_per_pulse) << '\n'
        << "backflash.emission_prob = " << format_double_exact(exp.backflash.emission_prob)
        << '\n'
        << "backflash.peak_weight = " << format_double_exact(exp.backflash.peak_weight)
        << '\n'
        << "backflash.peak_delay_ns = " << format_double_exact(exp.backflash.peak_delay_ns)
        << '\n'
        << "backflash.peak_sigma_ns = " << format_double_exact(exp.backflash.peak_sigma_ns)
        << '\n'
        << "backflash.uniform_fraction = "
        << format_double_exact(exp.backflash.uniform_fraction) << '\n';
    for (std::size_t i = 0; i < exp.reflections.size(); ++i) {
        const std::string prefix = "reflection." + std::to_string(i) + ".";
        out << prefix << "delay_ns = " << format_double_exact(exp.reflections[i].delay_ns)
            << '\n'
            << prefix << "return_prob = "
            << format_double_exact(exp.reflections[i].return_prob) << '\n';
    }
    out << "monitor.detector_efficiency = "
        << format_double_exact(exp.monitor.detector_efficiency) << '\n'
        << "monitor.channel_transmission = "
        << format_double_exact(exp.monitor.channel_transmission) << '\n'
        << "monitor.dark_rate_cps = " << format_double_exact(exp.monitor.dark_rate_cps)
        << '\n'
        << "run.duration_s = " << format_double_exact(exp.duration_s) << '\n';
    if (cfg.seed_set) out << "run.seed = " << exp.seed << '\n';
    out << "run.bin_width_ps = " << exp.bin_width_ps << '\n'
        << "keyrate.basis_prob = " << format_double_exact(cfg.keyrate.basis_prob) << '\n'
        << "keyrate.info_leakage = " << format_double_exact(cfg.keyrate.info_leakage)
        << '\n'
        << "keyrate.ec_efficiency = " << format_double_exact(cfg.keyrate.ec_efficiency)
        << '\n'
        << "keyrate.mean_photons = " << format_double_exact(cfg.keyrate.mean_photons)
        << '\n'
        << "keyrate.bob_efficiency = " << format_double_exact(cfg.keyrate.bob_efficiency)
        << '\n'
        << "keyrate.dark_count_prob_per_gate = "
        << format_double_exact(cfg.keyrate.dark_count_prob_per_gate) << '\n'
        << "keyrate.fiber_loss_db_per_km = "
        << format_double_exact(cfg.keyrate.fiber_loss_db_per_km) << '\n'
        << "keyrate.detector_error = " << format_double_exact(cfg.keyrate.detector_error)
        << '\n'
        << "keyrate.clock_rate_hz = " << format_double_exact(cfg.keyrate.clock_rate_hz)
        << '\n'
        << "keyrate.distance_min_km = "
        << format_double_exact(cfg.keyrate_sweep.distance_min_km) << '\n'
        << "keyrate.distance_max_km = "
        << format_double_exact(cfg.keyrate_sweep.distance_max_km) << '\n'
        << "keyrate.distance_step_km = "
        << format_double_exact(cfg.keyrate_sweep.distance_step_km) << '\n'
        << "keyrate.leakages = " << detail::join(cfg.keyrate_sweep.leakages) << '\n'
        << "darkcurrent.onset_na = " << format_double_exact(cfg.dark_curve.onset_na)
        << '\n'
        << "darkcurrent.linear_threshold_na = "
        << format_double_exact(cfg.dark_curve.linear_threshold_na) << '\n'
        << "darkcurrent.slope_cps_per_na = "
        << format_double_exact(cfg.dark_curve.slope_cps_per_na) << '\n'
        << "darkcurrent.floor_cps = " << format_double_exact(cfg.dark_curve.floor_cps)
        << '\n'
        << "darksweep.current_min_na = "
        << format_double_exact(cfg.dark_sweep.current_min_na) << '\n'
        << "darksweep.current_max_na = "
        << format_double_exact(cfg.dark_sweep.current_max_na) << '\n'
        << "darksweep.points = " << cfg.dark_sweep.points << '\n'
        << "darksweep.duration_s = " << format_double_exact(cfg.dark_sweep.duration_s)
        << '\n'
        << "darksweep.fit_threshold_na = "
        << format_double_exact(cfg.dark_sweep.fit_threshold_na) << '\n'
        << "sweep.efficiencies = " << detail::join(cfg.efficiency_sweep.efficiencies)
        << '\n'
        << "sweep.duration_s = " << format_double_exact(cfg.efficiency_sweep.duration_s)
        << '\n';
    return out.str();
}

inline FullConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace backflash
