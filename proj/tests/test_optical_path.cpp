#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "backflash/optical_path.hpp"

using namespace backflash;
using Catch::Matchers::WithinAbs;

namespace {

std::int64_t count_origin(const std::vector<MonitorEvent>& events, Origin origin) {
    std::int64_t n = 0;
    for (const auto& e : events) n += e.origin == origin ? 1 : 0;
    return n;
}

MonitorParams quiet_monitor() {
    MonitorParams mon;
    mon.dark_rate_cps = 0.0;
    return mon;
}

} // namespace

TEST_CASE("detected fraction is the efficiency product") {
    MonitorParams mon;
    mon.detector_efficiency = 1.0;
    mon.channel_transmission = 1.0;
    CHECK(detected_fraction(mon) == 1.0);
    mon.detector_efficiency = 0.80;
    mon.channel_transmission = 0.78;
    CHECK_THAT(detected_fraction(mon), WithinAbs(0.624, 1e-15));
    mon.detector_efficiency = 0.5;
    mon.channel_transmission = 0.5;
    CHECK(detected_fraction(mon) == 0.25);
}

TEST_CASE("pulse train descriptor covers the run") {
    GateConfig gate;
    const PulseTrain train = pulse_train_for(gate, 10.0);
    CHECK(train.period_ps == 64000);
    CHECK(train.count == 156250000);
    CHECK(train.start_ps == 0);
}

TEST_CASE("emission thinning is binomial at the efficiency product") {
    std::vector<std::int64_t> emissions;
    emissions.reserve(1000000);
    for (std::int64_t i = 0; i < 1000000; ++i) emissions.push_back(i * 1000);
    const MonitorParams mon = quiet_monitor(); // 0.624 product
    const auto events =
        propagate(emissions, PulseTrain{}, {}, mon, true, 1.1, 3);
    const double expected = 1e6 * 0.624;
    const double sigma = std::sqrt(1e6 * 0.624 * 0.376);
    CHECK_THAT(static_cast<double>(events.size()), WithinAbs(expected, 4 * sigma));
    CHECK(count_origin(events, Origin::Backflash) ==
          static_cast<std::int64_t>(events.size()));
}

TEST_CASE("a fully lossy channel passes no backflash") {
    std::vector<std::int64_t> emissions{100, 200, 300};
    MonitorParams mon = quiet_monitor();
    mon.channel_transmission = 0.0;
    const auto events = propagate(emissions, PulseTrain{}, {}, mon, true, 1.0, 5);
    CHECK(count_origin(events, Origin::Backflash) == 0);
}

TEST_CASE("inactive detector contributes no backflash events") {
    std::vector<std::int64_t> emissions{100, 200, 300};
    const auto events =
        propagate(emissions, PulseTrain{}, {}, quiet_monitor(), false, 1.0, 5);
    CHECK(events.empty());
}

TEST_CASE("reflection-only run puts every event at the configured delays") {
    GateConfig gate;
    const PulseTrain train = pulse_train_for(gate, 2.0);
    const std::vector<ReflectionPoint> refl{{17.125, 2e-5}, {49.125, 2e-5}};
    const auto events =
        propagate({}, train, refl, quiet_monitor(), false, 2.0, 41, 0.0);

    const double expected = 2.0 * static_cast<double>(train.count) * 2e-5;
    CHECK_THAT(static_cast<double>(events.size()),
               WithinAbs(expected, 4 * std::sqrt(expected)));
    for (const auto& e : events) {
        CHECK(e.origin == Origin::Backreflection);
        const std::int64_t folded = e.timestamp_ps % train.period_ps;
        CHECK((folded == 17125 || folded == 49125));
    }
}

TEST_CASE("reflection jitter spreads arrivals around the delay") {
    GateConfig gate;
    const PulseTrain train = pulse_train_for(gate, 1.0);
    const std::vector<ReflectionPoint> refl{{17.125, 4e-5}};
    const auto events =
        propagate({}, train, refl, quiet_monitor(), false, 1.0, 43, 200.0);
    REQUIRE(events.size() > 100);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& e : events) {
        const double d = static_cast<double>(e.timestamp_ps % train.period_ps) - 17125.0;
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(events.size());
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK_THAT(mean, WithinAbs(0.0, 4 * 200.0 / std::sqrt(n)));
    CHECK_THAT(sd, WithinAbs(200.0, 25.0));
}

TEST_CASE("reflections fire whether or not the APD is active") {
    GateConfig gate;
    const PulseTrain train = pulse_train_for(gate, 1.0);
    const std::vector<ReflectionPoint> refl{{17.125, 1e-5}};
    const auto on = propagate({}, train, refl, quiet_monitor(), true, 1.0, 47, 0.0);
    const auto off = propagate({}, train, refl, quiet_monitor(), false, 1.0, 47, 0.0);
    REQUIRE(!on.empty());
    CHECK(on.size() == off.size());
    bool equal = true;
    for (std::size_t i = 0; i < on.size(); ++i)
        equal = equal && on[i].timestamp_ps == off[i].timestamp_ps;
    CHECK(equal);
}

TEST_CASE("monitor dark counts arrive at the configured rate") {
    MonitorParams mon;
    mon.dark_rate_cps = 100.0;
    const double duration = 50.0;
    const auto events = propagate({}, PulseTrain{}, {}, mon, false, duration, 53);
    const double expected = 100.0 * duration;
    CHECK_THAT(static_cast<double>(events.size()),
               WithinAbs(expected, 4 * std::sqrt(expected)));
    for (std::size_t i = 0; i < events.size(); i += 17) {
        CHECK(events[i].origin == Origin::Dark);
        CHECK(events[i].timestamp_ps >= 0);
        CHECK(events[i].timestamp_ps < ps_from_s(duration));
    }
}

TEST_CASE("merged stream is sorted and per-stream statistics survive") {
    GateConfig gate;
    const PulseTrain train = pulse_train_for(gate, 1.0);
    std::vector<std::int64_t> emissions;
    for (std::int64_t i = 0; i < 20000; ++i) emissions.push_back(i * 49000 + 7);
    MonitorParams mon; // dark 100 cps
    const std::vector<ReflectionPoint> refl{{17.125, 1e-5}};
    const auto events = propagate(emissions, train, refl, mon, true, 1.0, 59, 200.0);

    CHECK(std::is_sorted(events.begin(), events.end(),
                         [](const MonitorEvent& a, const MonitorEvent& b) {
                             return a.timestamp_ps < b.timestamp_ps;
                         }));
    const double bf = static_cast<double>(count_origin(events, Origin::Backflash));
    const double rf = static_cast<double>(count_origin(events, Origin::Backreflection));
    const double dk = static_cast<double>(count_origin(events, Origin::Dark));
    CHECK_THAT(bf, WithinAbs(20000 * 0.624, 4 * std::sqrt(20000 * 0.624)));
    CHECK_THAT(rf, WithinAbs(156.25, 4 * std::sqrt(156.25)));
    CHECK_THAT(dk, WithinAbs(100.0, 4 * std::sqrt(100.0)));
}

TEST_CASE("unsorted emission streams are rejected") {
    const std::vector<std::int64_t> bad{100, 50};
    CHECK_THROWS_AS(propagate(bad, PulseTrain{}, {}, MonitorParams{}, true, 1.0, 1),
                    IoError);
}

TEST_CASE("events beyond the run duration are dropped") {
    std::vector<std::int64_t> emissions{500, ps_from_s(1.0) + 5000};
    MonitorParams mon = quiet_monitor();
    mon.detector_efficiency = 1.0;
    mon.channel_transmission = 1.0;
    const auto events = propagate(emissions, PulseTrain{}, {}, mon, true, 1.0, 61);
    REQUIRE(events.size() == 1);
    CHECK(events[0].timestamp_ps == 500);
}
