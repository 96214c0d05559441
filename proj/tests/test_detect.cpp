#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mloc/detect.hpp"
#include "mloc/simulate.hpp"

#include "helpers.hpp"

using namespace mloc;

namespace {

// Variance series on a 5 Hz grid with crests and quiet exactly where asked.
AccelVariance synthetic_variance(double total_seconds,
                                 const std::vector<std::pair<double, double>>& crests,
                                 double crest_level = 0.6) {
    AccelVariance av;
    av.combined.source = "accel";
    long n = static_cast<long>(total_seconds * 5.0);
    for (long k = 0; k <= n; ++k) {
        double t = static_cast<double>(k) / 5.0;
        double v = 0.0;
        for (auto [a, b] : crests)
            if (t >= a && t <= b) v = crest_level;
        av.combined.t.push_back(t);
        av.combined.v.push_back(v);
        av.direction.push_back(+1);
    }
    return av;
}

}  // namespace

TEST_CASE("crest-quiet-crest yields one stop with tight bounds") {
    auto av = synthetic_variance(80.0, {{38.0, 40.0}, {65.0, 67.0}});
    auto stops = detect_accel_stops(av, DetectorConfig{});
    REQUIRE(stops.size() == 1);
    CHECK(stops[0].bt == Catch::Approx(40.0).margin(0.5));
    CHECK(stops[0].et == Catch::Approx(65.0).margin(0.5));
}

TEST_CASE("all-quiet variance yields nothing") {
    auto av = synthetic_variance(120.0, {});
    CHECK(detect_accel_stops(av, DetectorConfig{}).empty());
}

TEST_CASE("five seconds of quiet is not a stop") {
    auto av = synthetic_variance(60.0, {{20.0, 22.0}, {27.0, 29.0}});
    CHECK(detect_accel_stops(av, DetectorConfig{}).empty());
}

TEST_CASE("mid-dwell bustle between the quiet stretch and departure is kept") {
    // quiet 30..45 (15 s, latched), then moderate bustle below crest level,
    // then the departure crest.
    auto av = synthetic_variance(80.0, {{28.0, 30.0}, {60.0, 62.0}});
    for (std::size_t i = 0; i < av.combined.t.size(); ++i)
        if (av.combined.t[i] > 45.0 && av.combined.t[i] < 55.0) av.combined.v[i] = 0.25;
    auto stops = detect_accel_stops(av, DetectorConfig{});
    REQUIRE(stops.size() == 1);
    CHECK(stops[0].bt == Catch::Approx(30.0).margin(0.5));
    CHECK(stops[0].et == Catch::Approx(60.0).margin(0.5));
}

TEST_CASE("raising the crest threshold never increases the candidate count") {
    Rng rng(8899);
    for (int it = 0; it < 20; ++it) {
        AccelVariance av;
        av.combined.source = "accel";
        long n = 5 * 600;
        for (long k = 0; k <= n; ++k) {
            av.combined.t.push_back(static_cast<double>(k) / 5.0);
            double r = rng.uniform();
            double v = r < 0.6 ? rng.uniform(0.0, 0.08) : (r < 0.9 ? rng.uniform(0.1, 0.4) : rng.uniform(0.4, 1.2));
            av.combined.v.push_back(v);
            av.direction.push_back(+1);
        }
        DetectorConfig cfg;
        std::size_t prev = SIZE_MAX;
        for (double th : {0.4, 0.5, 0.7, 0.9, 1.1}) {
            cfg.accel_crest_threshold = th;
            std::size_t cnt = detect_accel_stops(av, cfg).size();
            CHECK(cnt <= prev);
            prev = cnt;
        }
    }
}

namespace {

std::vector<BaroSample> baro_with_doors(double drop_at, double rise_at, double step,
                                        double total = 120.0, double level = 1013.0) {
    std::vector<BaroSample> out;
    long n = static_cast<long>(total * 3.0);
    for (long k = 0; k <= n; ++k) {
        double t = static_cast<double>(k) / 3.0;
        double p = level;
        if (t >= drop_at && t < rise_at) p -= step;
        out.push_back({t, p});
    }
    return out;
}

}  // namespace

TEST_CASE("door signature confirms a stop") {
    StopEvent cand{40.0, 80.0, std::nullopt, false};
    auto baro = baro_with_doors(45.0, 73.0, 0.4);
    CHECK(confirm_stop_baro(cand, baro, DetectorConfig{}) == BaroConfirm::confirmed);
}

TEST_CASE("flat pressure rejects a stop") {
    StopEvent cand{40.0, 80.0, std::nullopt, false};
    auto baro = baro_with_doors(45.0, 73.0, 0.0);
    CHECK(confirm_stop_baro(cand, baro, DetectorConfig{}) == BaroConfirm::rejected);
}

TEST_CASE("a 0.2 hPa step is below the door threshold") {
    StopEvent cand{40.0, 80.0, std::nullopt, false};
    auto baro = baro_with_doors(45.0, 73.0, 0.2);
    CHECK(confirm_stop_baro(cand, baro, DetectorConfig{}) == BaroConfirm::rejected);
}

TEST_CASE("no barometer means unconfirmed, not rejected") {
    StopEvent cand{40.0, 80.0, std::nullopt, false};
    CHECK(confirm_stop_baro(cand, {}, DetectorConfig{}) == BaroConfirm::no_data);
}

TEST_CASE("confirmation is invariant to a constant pressure offset") {
    Rng rng(404);
    DetectorConfig cfg;
    for (int it = 0; it < 25; ++it) {
        StopEvent cand{40.0, 80.0, std::nullopt, false};
        double step = rng.uniform(0.0, 0.6);
        auto baro = baro_with_doors(45.0, 45.0 + rng.uniform(5.0, 30.0), step);
        for (auto& s : baro) s.baro += rng.normal(0, 0.01);
        auto base = confirm_stop_baro(cand, baro, cfg);
        auto shifted = baro;
        double c = rng.uniform(-30.0, 30.0);
        for (auto& s : shifted) s.baro += c;
        CHECK(confirm_stop_baro(cand, shifted, cfg) == base);
    }
}

TEST_CASE("segment_trace on a 7-station simulator trip") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 11);
    TripSpec spec = test_helpers::quiet_trip("A", "A01", "A07");
    spec.mag_sigma = 0.4;
    spec.accel_sigma = 0.015;
    spec.baro_sigma = 0.02;
    SimTrip trip = gen_trip(world, spec, 5);
    UserTrace ut = segment_trace(trip.trace, DetectorConfig{});
    CHECK(ut.num_stops() == 7);
    CHECK(ut.num_runs() == 6);
    CHECK(validate_user_trace(ut).empty());
    // Detected stop intervals track the ground truth closely.
    REQUIRE(trip.truth.stops.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(ut.stops[i].bt == Catch::Approx(trip.truth.stops[i].bt).margin(2.0));
        CHECK(ut.stops[i].et == Catch::Approx(trip.truth.stops[i].et).margin(2.0));
    }
}

TEST_CASE("running events carry exactly the mag samples of their interval") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 11);
    TripSpec spec = test_helpers::quiet_trip("B", "B03", "B08");
    spec.mag_sigma = 0.4;
    spec.accel_sigma = 0.015;
    spec.baro_sigma = 0.02;
    SimTrip trip = gen_trip(world, spec, 6);
    UserTrace ut = segment_trace(trip.trace, DetectorConfig{});
    for (const auto& run : ut.runs) {
        std::size_t expect = 0;
        for (const auto& s : trip.trace.mag)
            if (s.t > run.bt && s.t < run.et) ++expect;
        CHECK(run.m_trace.size() == expect);
    }
}

TEST_CASE("a mid-tunnel decoy without a door signature is filtered out") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 11);
    TripSpec spec = test_helpers::quiet_trip("C", "C01", "C06");
    spec.mag_sigma = 0.4;
    spec.accel_sigma = 0.015;
    spec.baro_sigma = 0.02;
    spec.decoy_decel_rate = 1.2;
    SimTrip trip = gen_trip(world, spec, 7);
    REQUIRE(!trip.truth.decoys.empty());

    DetectorConfig cfg;
    AccelVariance av = accel_variance(trip.trace.accel);
    auto candidates = detect_accel_stops(av, cfg);
    CHECK(candidates.size() > trip.truth.stops.size());  // decoys fired

    UserTrace ut = segment_trace(trip.trace, cfg);
    CHECK(ut.num_stops() == trip.truth.stops.size());
    CHECK(ut.num_runs() == trip.truth.tunnels.size());
}

TEST_CASE("two-station trip segments into the minimal trace") {
    auto metro = test_helpers::three_line_metro();
    SyntheticWorld world = gen_world(metro, 11);
    TripSpec spec = test_helpers::quiet_trip("A", "A03", "A04");
    SimTrip trip = gen_trip(world, spec, 8);
    UserTrace ut = segment_trace(trip.trace, DetectorConfig{});
    CHECK(ut.num_stops() == 2);
    CHECK(ut.num_runs() == 1);
}

TEST_CASE("a trip with fewer than two detectable stops is an error") {
    SensorTrace quiet;
    quiet.trip_id = "flat";
    for (int i = 0; i < 500; ++i) {
        double t = 0.2 * i;
        quiet.accel.push_back({t, 0.0, 0.0, 9.81});
        quiet.mag.push_back(make_mag_sample(t, 30, 20, 25));
    }
    CHECK_THROWS_AS(segment_trace(quiet, DetectorConfig{}), TooShortTripError);
}

TEST_CASE("stops closer than min_running_seconds merge into one") {
    // Double door cycle: two stop candidates 2 s apart collapse into one,
    // while a third stop past a 39 s running stretch stays separate.
    SensorTrace trace;
    trace.trip_id = "merge";
    auto in = [](double t, double a, double b) { return t >= a && t <= b; };
    for (long k = 0; k <= 5 * 140; ++k) {
        double t = static_cast<double>(k) / 5.0;
        double ax = 0.0;
        bool crest = in(t, 18, 20) || in(t, 32, 34) || in(t, 85, 87) || in(t, 99, 101);
        bool running = t > 48 && t < 85;
        if (crest)
            ax = (k % 2) ? 0.6 : 0.0;
        else if (running)
            ax = (k % 2) ? 0.25 : 0.0;
        trace.accel.push_back({t, ax, 0.0, 9.81});
        trace.mag.push_back(make_mag_sample(t, 30, 20, 25));
    }
    // One more crest right after the first dwell to make the double cycle:
    // layout is crest(18-20) quiet crest(32-34) quiet crest(46-48) running
    // crest(85-87) quiet crest(99-101); patch in the 46-48 crest.
    for (long k = 0; k <= 5 * 140; ++k) {
        double t = static_cast<double>(k) / 5.0;
        if (in(t, 46, 48)) trace.accel[static_cast<std::size_t>(k)].x = (k % 2) ? 0.6 : 0.0;
    }

    DetectorConfig cfg;
    auto cands = detect_accel_stops(accel_variance(trace.accel), cfg);
    REQUIRE(cands.size() == 3);

    // No barometer: candidates pass unconfirmed, then the merge rule applies.
    UserTrace ut = segment_trace(trace, cfg);
    REQUIRE(ut.num_stops() == 2);
    CHECK(ut.stops[0].bt == Catch::Approx(20.0).margin(1.0));
    CHECK(ut.stops[0].et == Catch::Approx(46.0).margin(1.0));
    CHECK(ut.stops[1].bt == Catch::Approx(87.0).margin(1.0));
}
