// Command-line driver for the backflash simulator and analysis pipeline.
// Subcommands: simulate, analyze, keyrate, darksweep, sweep-efficiency.
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 statistics failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "backflash/analysis.hpp"
#include "backflash/config_io.hpp"
#include "backflash/darkcurrent.hpp"
#include "backflash/keyrate.hpp"
#include "backflash/pipeline.hpp"
#include "backflash/timetag.hpp"

namespace fs = std::filesystem;
using namespace backflash;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    std::optional<std::int64_t> bins;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_threads) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (created if missing)");
    cmd->add_option("--seed", args.seed, "override run.seed");
    cmd->add_option("--duration", args.duration_s, "override run duration in seconds");
    cmd->add_option("--bins", args.bins, "bins per laser period (overrides bin width)");
    if (with_threads)
        cmd->add_option("--threads", args.threads, "simulation worker threads")
            ->check(CLI::PositiveNumber);
}

FullConfig load_with_overrides(const CommonArgs& args) {
    FullConfig cfg = load_config(args.config_path);
    if (args.seed) {
        cfg.experiment.seed = *args.seed;
        cfg.seed_set = true;
    }
    if (!cfg.seed_set)
        throw ConfigError("run.seed is required (set it in the config or pass --seed)");
    if (args.duration_s) cfg.experiment.duration_s = *args.duration_s;
    if (args.bins) {
        const std::int64_t period = cfg.experiment.gate.laser_period_ps();
        if (*args.bins <= 0 || period % *args.bins != 0)
            throw ConfigError("--bins must divide the laser period of "
                              + std::to_string(period) + " ps");
        cfg.experiment.bin_width_ps = period / *args.bins;
    }
    cfg.validate();
    return cfg;
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

std::vector<TimeTagRecord> to_records(std::span<const ApdEvent> clicks) {
    std::vector<TimeTagRecord> records;
    records.reserve(clicks.size());
    for (const auto& c : clicks)
        records.push_back({kChannelApd, static_cast<std::uint64_t>(c.timestamp_ps)});
    return records;
}

std::vector<TimeTagRecord> to_records(std::span<const MonitorEvent> events) {
    std::vector<TimeTagRecord> records;
    records.reserve(events.size());
    for (const auto& e : events)
        records.push_back({kChannelMonitor, static_cast<std::uint64_t>(e.timestamp_ps)});
    return records;
}

// Tag files carry timestamps only; the gate index of a click is recovered
// from its timestamp (every avalanche fires within its own gate window).
std::vector<ApdEvent> clicks_from_tags(const std::vector<TimeTagRecord>& records,
                                       const GateConfig& gate) {
    const std::int64_t period = gate.gate_period_ps();
    std::vector<ApdEvent> clicks;
    clicks.reserve(records.size());
    for (const auto& r : records) {
        if (r.channel != kChannelApd) continue;
        const auto ts = static_cast<std::int64_t>(r.timestamp_ps);
        clicks.push_back({ts, ts / period, ClickKind::Signal});
    }
    return clicks;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void print_leakage(const LeakageEstimate& est) {
    std::cout << "N_A (valid APD counts)  = " << detail::format_double(est.n_apd_valid)
              << "\nN_B (backflash counts)  = " << detail::format_double(est.n_backflash)
              << "\nleakage P_L             = " << detail::format_double(est.leakage)
              << " +/- " << detail::format_double(est.std_error) << "\n";
}

int cmd_simulate(const CommonArgs& args) {
    const FullConfig cfg = load_with_overrides(args);
    const fs::path out = ensure_out_dir(args.out_dir);
    const RunArtifacts art = run_experiment(cfg.experiment, args.threads);

    RunRecord record;
    record.config = cfg;
    auto emit = [&](const std::string& label, const std::vector<TimeTagRecord>& records) {
        const fs::path bin = out / (label + ".tags");
        write_tags(bin, records);
        write_tags_csv(out / (label + ".csv"), records);
        record.outputs[label] = bin.string();
    };
    emit("apd_on", to_records(art.sim.clicks));
    emit("apd_off", {});
    emit("monitor_on", to_records(art.monitor_on));
    emit("monitor_off", to_records(art.monitor_off));

    record.n_backflash = art.leakage.n_backflash;
    record.n_apd_valid = art.leakage.n_apd_valid;
    record.leakage = art.leakage.leakage;
    record.std_error = art.leakage.std_error;
    write_text(out / "run_record.txt", render_run_record(record));

    std::cout << "simulated " << detail::format_double(cfg.experiment.duration_s)
              << " s: " << art.sim.clicks.size() << " APD clicks, "
              << art.monitor_on.size() << " / " << art.monitor_off.size()
              << " monitor events (on / off)\n";
    print_leakage(art.leakage);
    return 0;
}

int cmd_analyze(const CommonArgs& args, const std::string& on_path,
                const std::string& off_path, const std::string& apd_path) {
    const FullConfig cfg = load_with_overrides(args);
    const fs::path out = ensure_out_dir(args.out_dir);

    auto monitor_on = timestamps_for_channel(read_tags(on_path), kChannelMonitor);
    auto monitor_off = timestamps_for_channel(read_tags(off_path), kChannelMonitor);
    auto clicks = clicks_from_tags(read_tags(apd_path), cfg.experiment.gate);

    const RunArtifacts art = analyze_tags(std::move(monitor_on), std::move(monitor_off),
                                          std::move(clicks), cfg.experiment);
    write_histogram_csv(out / "hist_on.csv", art.hist_on);
    write_histogram_csv(out / "hist_off.csv", art.hist_off);
    write_histogram_csv(out / "hist_subtracted.csv", art.hist_subtracted);

    RunRecord record;
    record.config = cfg;
    record.outputs["hist_on"] = (out / "hist_on.csv").string();
    record.outputs["hist_off"] = (out / "hist_off.csv").string();
    record.outputs["hist_subtracted"] = (out / "hist_subtracted.csv").string();
    record.n_backflash = art.leakage.n_backflash;
    record.n_apd_valid = art.leakage.n_apd_valid;
    record.leakage = art.leakage.leakage;
    record.std_error = art.leakage.std_error;
    write_text(out / "analysis_record.txt", render_run_record(record));

    print_leakage(art.leakage);
    return 0;
}

int cmd_keyrate(const CommonArgs& args) {
    const FullConfig cfg = load_config(args.config_path);
    const fs::path out = ensure_out_dir(args.out_dir);
    const std::vector<double> distances = cfg.keyrate_sweep.distances();

    const auto eq2 = key_rate_vs_distance(cfg.keyrate, distances,
                                          cfg.keyrate_sweep.leakages, false);
    const auto pess = key_rate_vs_distance(cfg.keyrate, distances,
                                           cfg.keyrate_sweep.leakages, true);
    write_curves_csv(out / "keyrate.csv", eq2);
    write_curves_csv(out / "keyrate_pessimistic.csv", pess);

    for (const auto& curve : eq2)
        std::cout << "P_L = " << detail::format_double(curve.leakage)
                  << ": positive rate out to " << detail::format_double(curve.cutoff_km())
                  << " km\n";
    for (const auto& curve : pess)
        std::cout << "P_L = " << detail::format_double(curve.leakage)
                  << " (pessimistic): positive rate out to "
                  << detail::format_double(curve.cutoff_km()) << " km\n";
    return 0;
}

int cmd_darksweep(const CommonArgs& args) {
    FullConfig cfg = load_config(args.config_path);
    if (args.seed) {
        cfg.experiment.seed = *args.seed;
        cfg.seed_set = true;
    }
    if (!cfg.seed_set)
        throw ConfigError("run.seed is required (set it in the config or pass --seed)");
    if (args.duration_s) cfg.dark_sweep.duration_s = *args.duration_s;
    cfg.validate();
    const fs::path out = ensure_out_dir(args.out_dir);

    const auto grid = log_spaced(cfg.dark_sweep.current_min_na,
                                 cfg.dark_sweep.current_max_na,
                                 static_cast<std::size_t>(cfg.dark_sweep.points));
    const auto points =
        simulate_dark_sweep(grid, cfg.dark_curve, cfg.dark_sweep.duration_s,
                            cfg.experiment.monitor, cfg.experiment.seed);
    write_sweep_csv(out / "darksweep.csv", points);

    const FitResult fit = linear_fit(points, cfg.dark_sweep.fit_threshold_na);
    const double kappa = detected_fraction(cfg.experiment.monitor);
    const double recovered = fit.slope / kappa;
    std::ostringstream rec;
    rec << "fit.threshold_na = " << detail::format_double_exact(cfg.dark_sweep.fit_threshold_na)
        << '\n'
        << "fit.slope_cps_per_na = " << detail::format_double_exact(fit.slope) << '\n'
        << "fit.intercept_cps = " << detail::format_double_exact(fit.intercept) << '\n'
        << "fit.r_squared = " << detail::format_double_exact(fit.r_squared) << '\n'
        << "fit.recovered_model_slope = " << detail::format_double_exact(recovered) << '\n';
    write_text(out / "darksweep_fit.txt", rec.str());

    std::cout << "fitted slope " << detail::format_double(fit.slope)
              << " cps/nA (model slope " << detail::format_double(recovered)
              << " after efficiency correction), r^2 = "
              << detail::format_double(fit.r_squared) << "\n";
    return 0;
}

int cmd_sweep_efficiency(const CommonArgs& args) {
    const FullConfig cfg = load_with_overrides(args);
    const fs::path out = ensure_out_dir(args.out_dir);
    const double duration =
        args.duration_s ? *args.duration_s : cfg.efficiency_sweep.duration_s;
    const auto points = sweep_efficiency(cfg.experiment,
                                         cfg.efficiency_sweep.efficiencies, duration,
                                         args.threads);
    write_efficiency_csv(out / "efficiency_sweep.csv", points);
    for (const auto& [eff, est] : points)
        std::cout << "eta = " << detail::format_double(eff)
                  << ": P_L = " << detail::format_double(est.leakage) << " +/- "
                  << detail::format_double(est.std_error) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backflash emission simulator and analysis pipeline for gated APDs"};
    app.require_subcommand(1);

    CommonArgs sim_args;
    auto* sim = app.add_subcommand(
        "simulate", "run the APD + monitor simulation and write time-tag streams");
    add_common(sim, sim_args, true);

    CommonArgs ana_args;
    std::string on_path;
    std::string off_path;
    std::string apd_path;
    auto* ana = app.add_subcommand(
        "analyze", "fold tag streams, subtract the baseline, estimate leakage");
    add_common(ana, ana_args, false);
    ana->add_option("--on", on_path, "APD-on monitor tag file")->required();
    ana->add_option("--off", off_path, "APD-off monitor tag file")->required();
    ana->add_option("--apd", apd_path, "APD click tag file")->required();

    CommonArgs kr_args;
    auto* kr = app.add_subcommand("keyrate", "secure-key-rate curves versus distance");
    kr->add_option("--config", kr_args.config_path, "experiment config file")->required();
    kr->add_option("--out", kr_args.out_dir, "output directory (created if missing)");

    CommonArgs dk_args;
    auto* dk = app.add_subcommand("darksweep",
                                  "dark-current sweep of the backflash rate plus fit");
    dk->add_option("--config", dk_args.config_path, "experiment config file")->required();
    dk->add_option("--out", dk_args.out_dir, "output directory (created if missing)");
    dk->add_option("--seed", dk_args.seed, "override run.seed");
    dk->add_option("--duration", dk_args.duration_s, "override per-point duration");

    CommonArgs ef_args;
    auto* ef = app.add_subcommand(
        "sweep-efficiency", "leakage versus APD detection efficiency (full pipeline)");
    add_common(ef, ef_args, true);

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (ana->parsed()) return cmd_analyze(ana_args, on_path, off_path, apd_path);
        if (kr->parsed()) return cmd_keyrate(kr_args);
        if (dk->parsed()) return cmd_darksweep(dk_args);
        if (ef->parsed()) return cmd_sweep_efficiency(ef_args);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const StatisticsError& e) {
        std::cerr << "statistics error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
