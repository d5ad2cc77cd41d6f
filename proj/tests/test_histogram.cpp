#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <numeric>
#include <vector>

#include "backflash/errors.hpp"
#include "backflash/histogram.hpp"
#include "backflash/rng.hpp"

using namespace backflash;

TEST_CASE("empty event list folds to all-zero bins") {
    const Histogram h = fold_histogram({}, 64000, 250, 1.0);
    REQUIRE(h.counts.size() == 256);
    CHECK(h.total() == 0);
    CHECK(h.bin_start_ps(37) == 37 * 250);
}

TEST_CASE("events one period apart land in one bin") {
    const std::vector<std::int64_t> ts{1000, 65000, 129000}; // 1 ns + k*64 ns
    const Histogram h = fold_histogram(ts, 64000, 250, 1.0);
    CHECK(h.counts[4] == 3); // 1000 / 250
    CHECK(h.total() == 3);
}

TEST_CASE("folding conserves the event count for any dividing bin width") {
    Random rng(404);
    std::vector<std::int64_t> ts;
    for (int i = 0; i < 10000; ++i)
        ts.push_back(static_cast<std::int64_t>(rng.uniform() * 5e9));
    for (std::int64_t width : {125, 250, 500, 1000, 64000}) {
        const Histogram h = fold_histogram(ts, 64000, width, 1.0);
        CHECK(h.total() == static_cast<std::int64_t>(ts.size()));
        CHECK(h.counts.size() == static_cast<std::size_t>(64000 / width));
    }
}

TEST_CASE("fold is additive over stream partitions") {
    Random rng(11);
    std::vector<std::int64_t> a, b, both;
    for (int i = 0; i < 5000; ++i) {
        const auto t = static_cast<std::int64_t>(rng.uniform() * 1e9);
        (i % 2 ? a : b).push_back(t);
        both.push_back(t);
    }
    const Histogram ha = fold_histogram(a, 64000, 250, 1.0);
    const Histogram hb = fold_histogram(b, 64000, 250, 1.0);
    const Histogram hm = merge(ha, hb);
    const Histogram hboth = fold_histogram(both, 64000, 250, 2.0);
    CHECK(hm.counts == hboth.counts);
    CHECK(hm.duration_s == 2.0);
}

TEST_CASE("non-dividing bin width is rejected") {
    CHECK_THROWS_AS(fold_histogram({}, 64000, 300, 1.0), ConfigError);
    CHECK_THROWS_AS(fold_histogram({}, 0, 250, 1.0), ConfigError);
    const std::vector<std::int64_t> bad{-5};
    CHECK_THROWS_AS(fold_histogram(bad, 64000, 250, 1.0), IoError);
}

TEST_CASE("self-subtraction yields zero") {
    const std::vector<std::int64_t> ts{100, 2000, 30000, 63999};
    const Histogram h = fold_histogram(ts, 64000, 250, 1.0);
    const Histogram d = subtract_baseline(h, h);
    CHECK(d.total() == 0);
    for (auto c : d.counts) CHECK(c == 0);
}

TEST_CASE("subtraction is signed and unclamped") {
    Histogram on = fold_histogram({}, 500, 250, 1.0);
    Histogram off = on;
    on.counts = {5, 3};
    off.counts = {2, 4};
    const Histogram d = subtract_baseline(on, off);
    CHECK(d.counts == std::vector<std::int64_t>{3, -1});
    CHECK(d.total() == 2);
}

TEST_CASE("baseline scales by duration ratio") {
    Histogram on = fold_histogram({}, 500, 250, 10.0);
    Histogram off = fold_histogram({}, 500, 250, 5.0);
    on.counts = {100, 100};
    off.counts = {10, 41};
    const Histogram d = subtract_baseline(on, off);
    // off is half as long: its bins count double
    CHECK(d.counts == std::vector<std::int64_t>{80, 18});
}

TEST_CASE("binning mismatches are rejected") {
    const Histogram a = fold_histogram({}, 64000, 250, 1.0);
    const Histogram b = fold_histogram({}, 64000, 500, 1.0);
    const Histogram c = fold_histogram({}, 32000, 250, 1.0);
    CHECK_THROWS_AS(subtract_baseline(a, b), StatisticsError);
    CHECK_THROWS_AS(subtract_baseline(a, c), StatisticsError);
    CHECK_THROWS_AS(merge(a, b), StatisticsError);
}

TEST_CASE("peak bin finds the largest count") {
    Histogram h = fold_histogram({}, 1000, 250, 1.0);
    h.counts = {4, 9, 9, 1};
    CHECK(h.peak_bin() == 1); // first of the tie
    h.counts = {-3, -1, -7, -2};
    CHECK(h.peak_bin() == 1);
}
