#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mloc/signal.hpp"
#include "mloc/simulate.hpp"

using namespace mloc;

TEST_CASE("clean_series leaves constants untouched") {
    std::vector<double> x{5, 5, 5, 5, 5};
    auto y = clean_series(x);
    REQUIRE(y.size() == x.size());
    for (double v : y) CHECK(v == Catch::Approx(5.0));
}

TEST_CASE("clean_series removes a lone spark") {
    std::vector<double> x{5, 5, 500, 5, 5};
    auto y = clean_series(x);
    REQUIRE(y.size() == x.size());
    for (double v : y) CHECK(v == Catch::Approx(5.0).margin(1e-9));
}

TEST_CASE("clean_series keeps length and stays within input bounds") {
    Rng rng(5150);
    for (int it = 0; it < 30; ++it) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 60));
        std::vector<double> x(n);
        for (auto& v : x) v = rng.normal(10.0, 4.0);
        auto y = clean_series(x);
        REQUIRE(y.size() == n);
        double lo = *std::min_element(x.begin(), x.end());
        double hi = *std::max_element(x.begin(), x.end());
        for (double v : y) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("clean_series rejects empty input") {
    CHECK_THROWS_AS(clean_series({}), EmptyInputError);
}

TEST_CASE("scalar_variance differences and midpoints") {
    std::vector<double> t{0.0, 1.0, 2.0};
    std::vector<double> x{1000.0, 1000.4, 1000.4};
    auto vs = scalar_variance(t, x, "baro");
    REQUIRE(vs.size() == 2);
    CHECK(vs.v[0] == Catch::Approx(0.4));
    CHECK(vs.v[1] == Catch::Approx(0.0));
    CHECK(vs.t[0] == Catch::Approx(0.5));
    CHECK(vs.t[1] == Catch::Approx(1.5));
    CHECK(vs.source == "baro");
}

TEST_CASE("scalar_variance kills constant drift exactly") {
    // Dyadic grid values keep the additions exact, so cancellation is exact.
    Rng rng(77);
    for (int it = 0; it < 100; ++it) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 40));
        std::vector<double> t(n), x(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<double>(i);
            x[i] = static_cast<double>(rng.uniform_int(-32000, 32000)) / 1024.0;
        }
        double c = static_cast<double>(rng.uniform_int(-32000, 32000)) / 1024.0;
        std::vector<double> shifted(x);
        for (auto& v : shifted) v += c;
        auto a = scalar_variance(t, x);
        auto b = scalar_variance(t, shifted);
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.v[i] == b.v[i]);
    }
}

TEST_CASE("scalar_variance needs two samples") {
    CHECK_THROWS_AS(scalar_variance(std::vector<double>{0.0}, std::vector<double>{1.0}),
                    InsufficientDataError);
}

namespace {

std::vector<AccelSample> constant_gravity(int n) {
    std::vector<AccelSample> out;
    for (int i = 0; i < n; ++i) out.push_back({0.2 * i, 0.0, 0.0, 9.8});
    return out;
}

}  // namespace

TEST_CASE("accel_variance on constant gravity is all zero, direction +1") {
    auto av = accel_variance(constant_gravity(20));
    for (double v : av.combined.v) CHECK(v == Catch::Approx(0.0));
    for (int d : av.direction) CHECK(d == +1);
}

TEST_CASE("accel_variance hand example") {
    std::vector<AccelSample> acc{{0.0, 0.0, 1.0, 9.8}, {0.2, 2.0, 1.0, 9.8}, {0.4, 2.0, 1.0, 9.8}};
    auto av = accel_variance(acc);
    REQUIRE(av.combined.size() == 2);
    CHECK(av.combined.v[0] == Catch::Approx(2.0));
    CHECK(av.combined.v[1] == Catch::Approx(0.0));
    CHECK(av.dominant_axis == Axis::X);
    REQUIRE(av.direction.size() == 2);
    CHECK(av.direction[0] == +1);
    CHECK(av.direction[1] == +1);
}

TEST_CASE("accel_variance combined is invariant to rotation plus gravity") {
    Rng rng(2718);
    for (int it = 0; it < 100; ++it) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 50));
        std::vector<AccelSample> base(n);
        for (std::size_t i = 0; i < n; ++i)
            base[i] = {0.2 * static_cast<double>(i), rng.normal(0, 1), rng.normal(0, 1),
                       rng.normal(0, 1)};
        Mat3 rot = Mat3::from_euler(rng.uniform(0, 6.28), rng.uniform(-1.5, 1.5),
                                    rng.uniform(0, 6.28));
        Vec3 g{rng.normal(0, 5), rng.normal(0, 5), rng.normal(0, 5)};
        std::vector<AccelSample> moved(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 v = rot.apply(Vec3{base[i].x, base[i].y, base[i].z}) + g;
            moved[i] = {base[i].t, v.x, v.y, v.z};
        }
        auto a = accel_variance(base);
        auto b = accel_variance(moved);
        for (std::size_t i = 0; i < a.combined.size(); ++i)
            REQUIRE(std::abs(a.combined.v[i] - b.combined.v[i]) < 1e-9);
    }
}

TEST_CASE("combined variance dominates each per-axis difference") {
    Rng rng(31337);
    std::vector<AccelSample> acc(40);
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] = {0.2 * static_cast<double>(i), rng.normal(0, 2), rng.normal(0, 2),
                  rng.normal(0, 2)};
    auto av = accel_variance(acc);
    for (std::size_t i = 0; i + 1 < acc.size(); ++i) {
        double dx = std::abs(acc[i + 1].x - acc[i].x);
        double dy = std::abs(acc[i + 1].y - acc[i].y);
        double dz = std::abs(acc[i + 1].z - acc[i].z);
        CHECK(av.combined.v[i] >= dx - 1e-12);
        CHECK(av.combined.v[i] >= dy - 1e-12);
        CHECK(av.combined.v[i] >= dz - 1e-12);
    }
}

TEST_CASE("accel_variance needs two samples") {
    CHECK_THROWS_AS(accel_variance(constant_gravity(1)), InsufficientDataError);
}
