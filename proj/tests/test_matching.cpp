#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mloc/detect.hpp"
#include "mloc/matching.hpp"
#include "mloc/simulate.hpp"

#include "helpers.hpp"

using namespace mloc;

namespace {

RunningEvent make_event(const std::vector<double>& mags, double t0 = 0.0,
                        const std::vector<double>& baro = {}) {
    RunningEvent re;
    re.bt = t0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        double t = t0 + 0.2 * static_cast<double>(i) + 0.1;
        re.m_trace.push_back(MagSample{t, mags[i], 0.0, 0.0, mags[i]});
    }
    for (std::size_t i = 0; i < baro.size(); ++i)
        re.b_trace.push_back({t0 + static_cast<double>(i) / 3.0 + 0.1, baro[i]});
    re.et = t0 + 0.2 * static_cast<double>(mags.size()) + 0.2;
    return re;
}

std::vector<double> bumpy(Rng& rng, std::size_t n, double base = 50.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = base + 8.0 * std::sin(0.12 * static_cast<double>(i)) + rng.normal(0, 0.3);
    return v;
}

}  // namespace

TEST_CASE("event distance of an event with itself is zero") {
    Rng rng(1);
    auto re = make_event(bumpy(rng, 120));
    CHECK(event_distance(re, re, MatchConfig{}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("event distance requires magnetometer data") {
    Rng rng(2);
    auto good = make_event(bumpy(rng, 60));
    RunningEvent empty;
    CHECK_THROWS_AS(event_distance(empty, good, MatchConfig{}), InsufficientDataError);
}

TEST_CASE("constant magnitude drift cancels out of the cost") {
    Rng rng(3);
    auto base = bumpy(rng, 150);
    auto re1 = make_event(base);
    auto shifted = base;
    for (auto& v : shifted) v += 7.25;
    auto re2 = make_event(shifted);
    auto re3 = make_event(base);
    MatchConfig cfg;
    double d_plain = event_distance(re1, re3, cfg);
    double d_drift = event_distance(re1, re2, cfg);
    CHECK(d_drift == Catch::Approx(d_plain).margin(1e-9));
}

TEST_CASE("baro term is dropped when either side lacks pressure data") {
    Rng rng(4);
    auto mags = bumpy(rng, 120);
    std::vector<double> press(72, 1013.0);
    for (std::size_t i = 0; i < press.size(); ++i)
        press[i] += 0.2 * std::sin(0.2 * static_cast<double>(i));
    auto with_baro = make_event(mags, 0.0, press);
    auto without = make_event(mags);
    MatchConfig cfg;  // both weights 1
    // Identical magnitudes: mag cost is 0, so any nonzero result would be
    // leakage from a missing-baro branch.
    CHECK(event_distance(with_baro, without, cfg) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("weights and baro scale shape the fused cost") {
    Rng rng(5);
    auto m1 = bumpy(rng, 120), m2 = bumpy(rng, 130);
    std::vector<double> p1(72), p2(78);
    for (std::size_t i = 0; i < p1.size(); ++i) p1[i] = 1013.0 + 0.3 * std::sin(0.15 * i);
    for (std::size_t i = 0; i < p2.size(); ++i) p2[i] = 1013.0 + 0.3 * std::cos(0.11 * i);
    auto a = make_event(m1, 0.0, p1);
    auto b = make_event(m2, 0.0, p2);

    EventFeatures fa = event_features(a), fb = event_features(b);
    REQUIRE(fa.has_baro());
    REQUIRE(fb.has_baro());
    double mag_cost = dtw_distance(fa.mag.v, fb.mag.v).normalized();
    double baro_cost = dtw_distance(fa.baro->v, fb.baro->v).normalized();

    MatchConfig cfg;
    cfg.mag_weight = 2.0;
    cfg.baro_weight = 0.5;
    cfg.baro_scale = 3.0;
    double expect = (2.0 * mag_cost + 0.5 * 3.0 * baro_cost) / 2.5;
    CHECK(event_distance(fa, fb, cfg) == Catch::Approx(expect).margin(1e-12));

    cfg.baro_weight = 0.0;
    CHECK(event_distance(fa, fb, cfg) == Catch::Approx(mag_cost).margin(1e-12));
}

TEST_CASE("calibrated baro scale matches the median cost ratio") {
    Rng rng(6);
    std::vector<EventFeatures> feats;
    for (int i = 0; i < 6; ++i) {
        auto mags = bumpy(rng, 110 + 5 * i);
        std::vector<double> press(60 + 3 * i);
        for (std::size_t k = 0; k < press.size(); ++k)
            press[k] = 1013.0 + 0.25 * std::sin(0.1 * static_cast<double>(k) + i);
        feats.push_back(event_features(make_event(mags, 0.0, press)));
    }
    std::vector<const EventFeatures*> ptrs;
    for (const auto& f : feats) ptrs.push_back(&f);
    MatchConfig cfg;
    double scale = calibrate_baro_scale(ptrs, cfg);
    CHECK(scale > 0.0);
    // Scaled baro medians should land on the mag median's order of magnitude.
    std::vector<double> mags, baros;
    for (std::size_t i = 0; i < feats.size(); ++i)
        for (std::size_t j = i + 1; j < feats.size(); ++j) {
            mags.push_back(dtw_distance(feats[i].mag.v, feats[j].mag.v).normalized());
            baros.push_back(dtw_distance(feats[i].baro->v, feats[j].baro->v).normalized());
        }
    std::sort(mags.begin(), mags.end());
    std::sort(baros.begin(), baros.end());
    double med_m = mags[mags.size() / 2], med_b = baros[baros.size() / 2];
    CHECK(scale == Catch::Approx(med_m / med_b).epsilon(
                       0.5));  // medians differ slightly (even/odd sampling)
}

TEST_CASE("same tunnel scores under threshold, different tunnels over it") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 33);
    MatchConfig cfg = simulator_calibrated_config();
    DetectorConfig dc;

    auto run_of = [&](const std::string& from, const std::string& to, std::uint64_t seed) {
        TripSpec spec = test_helpers::quiet_trip("A", from, to);
        spec.mag_sigma = 0.4;
        spec.accel_sigma = 0.015;
        spec.baro_sigma = 0.02;
        SimTrip trip = gen_trip(world, spec, seed);
        UserTrace ut = segment_trace(trip.trace, dc);
        REQUIRE(!ut.runs.empty());
        return ut.runs.front();
    };

    RunningEvent t1_a = run_of("A02", "A04", 100);
    RunningEvent t1_b = run_of("A02", "A04", 200);  // same first tunnel A02->A03
    RunningEvent t2 = run_of("A05", "A07", 300);    // different tunnel A05->A06

    double same = event_distance(t1_a, t1_b, cfg);
    double cross1 = event_distance(t1_a, t2, cfg);
    double cross2 = event_distance(t1_b, t2, cfg);
    CHECK(same < cfg.dtw_threshold);
    CHECK(cross1 > cfg.dtw_threshold);
    CHECK(cross2 > cfg.dtw_threshold);
}

TEST_CASE("pure speed warp costs almost nothing after variance features") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 33);
    MatchConfig cfg = simulator_calibrated_config();
    DetectorConfig dc;

    auto run_with_warp = [&](double warp, std::uint64_t seed) {
        TripSpec spec = test_helpers::quiet_trip("B", "B05", "B07");
        spec.speed_warp_min = warp;
        spec.speed_warp_max = warp;
        SimTrip trip = gen_trip(world, spec, seed);
        UserTrace ut = segment_trace(trip.trace, dc);
        REQUIRE(!ut.runs.empty());
        return ut.runs.front();
    };
    RunningEvent slow = run_with_warp(1.2, 41);
    RunningEvent fast = run_with_warp(0.9, 42);
    double d = event_distance(slow, fast, cfg);
    // Zero noise: the only residual is the per-sample amplitude scaling the
    // speed difference causes. It must stay under the accept threshold and
    // far under a genuine cross-tunnel distance.
    CHECK(d < cfg.dtw_threshold);

    TripSpec other = test_helpers::quiet_trip("B", "B09", "B11");
    SimTrip trip = gen_trip(world, other, 43);
    RunningEvent cross_run = segment_trace(trip.trace, dc).runs.front();
    double d_cross = event_distance(slow, cross_run, cfg);
    CHECK(d < 0.25 * d_cross);
}
