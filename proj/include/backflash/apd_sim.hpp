#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <thread>
#include <vector>

#include "backflash/config.hpp"
#include "backflash/errors.hpp"
#include "backflash/rng.hpp"

namespace backflash {

enum class ClickKind : std::uint8_t { Signal = 0, Dark = 1, Afterpulse = 2 };

struct ApdEvent {
    std::int64_t timestamp_ps = 0;
    std::int64_t gate_index = 0;
    ClickKind kind = ClickKind::Signal;
};

struct ApdSimResult {
    std::vector<ApdEvent> clicks;                     // sorted by timestamp
    std::vector<std::int64_t> backflash_emissions_ps; // sorted, within [0, duration)
};

// Per-illuminated-gate click probability excluding afterpulses:
// 1 - (1 - dark) * exp(-mu * eta). Analytic oracle for the simulator.
inline double expected_click_probability(const ApdParams& apd) {
    apd.validate();
    return 1.0 - (1.0 - apd.dark_count_prob_per_gate)
                     * std::exp(-apd.mean_photons_per_pulse * apd.detection_efficiency);
}

namespace detail {

// The run is partitioned into fixed-size chunks of gates; each chunk draws
// from substreams derived from (seed, chunk index) and is simulated
// independently. The chunk grid is part of the model definition, so results
// never depend on how chunks are distributed over worker threads.
// Afterpulses scheduled past a chunk boundary are discarded; with the chunk
// length below, that clips less than 1e-6 of them for any decay under 1 us.
inline constexpr std::int64_t kChunkGates = std::int64_t{1} << 28;

struct ChunkOutput {
    std::vector<ApdEvent> clicks;
    std::vector<std::int64_t> emissions;
};

// Candidate clicks carry a priority so that a gate occupied by a photon
// detection masks a coincident dark or afterpulse candidate (one avalanche
// per gate).
enum : int { kPrioSignal = 0, kPrioDark = 1, kPrioAfterpulse = 2 };

inline ChunkOutput simulate_chunk(const GateConfig& gate, const ApdParams& apd,
                                  const BackflashParams& backflash, std::int64_t gate_begin,
                                  std::int64_t gate_end, std::int64_t duration_ps,
                                  std::uint64_t seed, std::uint64_t chunk_index) {
    const std::int64_t period = gate.gate_period_ps();
    const std::int64_t on_width = gate.on_width_ps();
    const std::int64_t divisor = gate.illumination_divisor;
    const double p_signal =
        1.0 - std::exp(-apd.mean_photons_per_pulse * apd.detection_efficiency);
    const double p_dark = apd.dark_count_prob_per_gate;
    // afterpulse offset in gates: geometric with ratio exp(-T_gate / tau)
    const double ap_gate_prob =
        1.0 - std::exp(-static_cast<double>(period)
                       / (apd.afterpulse_decay_ns * kPicosecondsPerNanosecond));
    const std::int64_t laser_period = gate.laser_period_ps();

    Random rng_signal(derive_seed(seed, seed_tag::apd_signal, chunk_index));
    Random rng_dark(derive_seed(seed, seed_tag::apd_dark, chunk_index));
    Random rng_click(derive_seed(seed, seed_tag::apd_click, chunk_index));

    // Candidate gates for photon detections (illuminated gates only).
    std::vector<std::int64_t> signal_gates;
    if (p_signal > 0.0) {
        std::int64_t first_ill = ((gate_begin + divisor - 1) / divisor) * divisor;
        std::int64_t slot = first_ill / divisor - 1; // illuminated-subsequence index
        const std::int64_t slot_end = (gate_end - 1) / divisor; // last slot in chunk
        while (true) {
            std::int64_t skip = rng_signal.geometric_skip(p_signal);
            if (skip > slot_end - slot) break;
            slot += skip;
            signal_gates.push_back(slot * divisor);
        }
    }

    // Candidate gates for dark counts (every gate).
    std::vector<std::int64_t> dark_gates;
    if (p_dark > 0.0) {
        std::int64_t g = gate_begin - 1;
        while (true) {
            std::int64_t skip = rng_dark.geometric_skip(p_dark);
            if (skip > gate_end - 1 - g) break;
            g += skip;
            dark_gates.push_back(g);
        }
    }

    ChunkOutput out;
    out.clicks.reserve(signal_gates.size() + dark_gates.size());

    using Pending = std::pair<std::int64_t, int>; // (gate, priority)
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> afterpulses;

    std::size_t si = 0;
    std::size_t di = 0;
    std::int64_t last_clicked_gate = -1;

    auto emit_backflash = [&](std::int64_t click_ts) {
        double delay_ps;
        if (rng_click.uniform() < backflash.peak_weight) {
            delay_ps = rng_click.normal(backflash.peak_delay_ns * kPicosecondsPerNanosecond,
                                        backflash.peak_sigma_ns * kPicosecondsPerNanosecond);
        } else {
            delay_ps = rng_click.uniform() * static_cast<double>(laser_period);
        }
        std::int64_t ts = click_ts + static_cast<std::int64_t>(std::llround(delay_ps));
        if (ts >= 0 && ts < duration_ps) out.emissions.push_back(ts);
    };

    while (true) {
        std::int64_t g = std::numeric_limits<std::int64_t>::max();
        int prio = kPrioAfterpulse + 1;
        if (si < signal_gates.size()) { g = signal_gates[si]; prio = kPrioSignal; }
        if (di < dark_gates.size()
            && (dark_gates[di] < g || (dark_gates[di] == g && kPrioDark < prio))) {
            g = dark_gates[di];
            prio = kPrioDark;
        }
        if (!afterpulses.empty()
            && (afterpulses.top().first < g
                || (afterpulses.top().first == g && kPrioAfterpulse < prio))) {
            g = afterpulses.top().first;
            prio = kPrioAfterpulse;
        }
        if (prio > kPrioAfterpulse) break;

        if (prio == kPrioSignal) ++si;
        else if (prio == kPrioDark) ++di;
        else afterpulses.pop();

        if (g == last_clicked_gate) continue; // gate already avalanched
        last_clicked_gate = g;

        std::int64_t ts = g * period;
        ClickKind kind = ClickKind::Signal;
        if (prio != kPrioSignal) {
            // dark and afterpulse avalanches trigger anywhere in the ON window
            kind = prio == kPrioDark ? ClickKind::Dark : ClickKind::Afterpulse;
            auto off = static_cast<std::int64_t>(rng_click.uniform()
                                                 * static_cast<double>(on_width));
            ts += std::min(off, on_width - 1);
        }
        out.clicks.push_back({ts, g, kind});

        if (rng_click.bernoulli(apd.afterpulse_prob_total)) {
            std::int64_t target = g + rng_click.geometric_skip(ap_gate_prob);
            if (target > g && target < gate_end)
                afterpulses.emplace(target, kPrioAfterpulse);
        }
        if (rng_click.bernoulli(backflash.emission_prob)) emit_backflash(ts);
    }

    std::sort(out.emissions.begin(), out.emissions.end());
    return out;
}

} // namespace detail

// Simulates the gated APD over `duration_s`. Returns the click sequence and
// the timestamps of backflash photons coupled into the fiber. Deterministic
// for a fixed (config, seed) regardless of `threads`.
inline ApdSimResult simulate_apd(const GateConfig& gate, const ApdParams& apd,
                                 const BackflashParams& backflash, double duration_s,
                                 std::uint64_t seed, int threads = 1) {
    gate.validate();
    apd.validate();
    backflash.validate();
    if (duration_s <= 0.0) throw ConfigError("simulate_apd: duration must be positive");

    const std::int64_t total_gates =
        static_cast<std::int64_t>(duration_s * gate.frequency_hz);
    const std::int64_t duration_ps = ps_from_s(duration_s);
    const std::int64_t n_chunks =
        (total_gates + detail::kChunkGates - 1) / detail::kChunkGates;

    std::vector<detail::ChunkOutput> chunks(static_cast<std::size_t>(n_chunks));
    auto run_chunk = [&](std::int64_t c) {
        std::int64_t begin = c * detail::kChunkGates;
        std::int64_t end = std::min(begin + detail::kChunkGates, total_gates);
        chunks[static_cast<std::size_t>(c)] =
            detail::simulate_chunk(gate, apd, backflash, begin, end, duration_ps, seed,
                                   static_cast<std::uint64_t>(c));
    };

    int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(n_chunks)));
    if (n_workers == 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::int64_t c = w; c < n_chunks; c += n_workers) run_chunk(c);
            });
        }
        for (auto& t : pool) t.join();
    }

    ApdSimResult result;
    std::size_t n_clicks = 0;
    std::size_t n_emissions = 0;
    for (const auto& c : chunks) {
        n_clicks += c.clicks.size();
        n_emissions += c.emissions.size();
    }
    result.clicks.reserve(n_clicks);
    result.backflash_emissions_ps.reserve(n_emissions);
    for (auto& c : chunks) {
        result.clicks.insert(result.clicks.end(), c.clicks.begin(), c.clicks.end());
        result.backflash_emissions_ps.insert(result.backflash_emissions_ps.end(),
                                             c.emissions.begin(), c.emissions.end());
    }
    // emissions from neighbouring chunks can interleave (delays up to a laser period)
    std::sort(result.backflash_emissions_ps.begin(), result.backflash_emissions_ps.end());
    return result;
}

} // namespace backflash
