#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "backflash/errors.hpp"

namespace backflash {

// Arrival-time histogram folded modulo the laser period. Counts are signed:
// baseline-subtracted histograms legitimately hold negative bins.
struct Histogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t period_ps = 0;
    double duration_s = 0.0;
    std::vector<std::int64_t> counts;

    std::size_t bin_count() const { return counts.size(); }

    std::int64_t bin_start_ps(std::size_t i) const {
        return static_cast<std::int64_t>(i) * bin_width_ps;
    }

    std::int64_t total() const {
        std::int64_t sum = 0;
        for (auto c : counts) sum += c;
        return sum;
    }

    // Index of the largest bin (first one on ties).
    std::size_t peak_bin() const {
        if (counts.empty()) throw StatisticsError("peak_bin: empty histogram");
        std::size_t best = 0;
        for (std::size_t i = 1; i < counts.size(); ++i)
            if (counts[i] > counts[best]) best = i;
        return best;
    }
};

inline Histogram fold_histogram(std::span<const std::int64_t> timestamps_ps,
                                std::int64_t period_ps, std::int64_t bin_width_ps,
                                double duration_s) {
    if (bin_width_ps <= 0) throw ConfigError("fold_histogram: bin width must be positive");
    if (period_ps <= 0) throw ConfigError("fold_histogram: period must be positive");
    if (period_ps % bin_width_ps != 0)
        throw ConfigError("fold_histogram: bin width must divide the folding period");
    if (duration_s <= 0.0) throw ConfigError("fold_histogram: duration must be positive");

    Histogram h;
    h.bin_width_ps = bin_width_ps;
    h.period_ps = period_ps;
    h.duration_s = duration_s;
    h.counts.assign(static_cast<std::size_t>(period_ps / bin_width_ps), 0);
    for (auto ts : timestamps_ps) {
        if (ts < 0) throw IoError("fold_histogram: negative timestamp");
        ++h.counts[static_cast<std::size_t>((ts % period_ps) / bin_width_ps)];
    }
    return h;
}

// on - off, rescaling the baseline by the duration ratio when the two runs
// are of unequal length. Equal durations subtract exactly.
inline Histogram subtract_baseline(const Histogram& on, const Histogram& off) {
    if (on.bin_width_ps != off.bin_width_ps || on.period_ps != off.period_ps
        || on.counts.size() != off.counts.size())
        throw StatisticsError("subtract_baseline: histograms have different binning");
    if (on.duration_s <= 0.0 || off.duration_s <= 0.0)
        throw StatisticsError("subtract_baseline: histograms carry no duration");

    Histogram out = on;
    const double scale = on.duration_s / off.duration_s;
    if (scale == 1.0) {
        for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] -= off.counts[i];
    } else {
        for (std::size_t i = 0; i < out.counts.size(); ++i)
            out.counts[i] -= std::llround(scale * static_cast<double>(off.counts[i]));
    }
    return out;
}

// Merge of two histograms over the same binning (concatenated acquisitions).
inline Histogram merge(const Histogram& a, const Histogram& b) {
    if (a.bin_width_ps != b.bin_width_ps || a.period_ps != b.period_ps
        || a.counts.size() != b.counts.size())
        throw StatisticsError("merge: histograms have different binning");
    Histogram out = a;
    out.duration_s += b.duration_s;
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    return out;
}

} // namespace backflash
