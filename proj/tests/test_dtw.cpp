#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mloc/dtw.hpp"
#include "mloc/simulate.hpp"

#include "dtw_oracle.hpp"

using namespace mloc;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t len, double scale = 2.0) {
    std::vector<double> v(len);
    for (auto& x : v) x = rng.normal(0.0, scale);
    return v;
}

}  // namespace

TEST_CASE("dtw identical series has zero cost") {
    std::vector<double> a{1, 2, 3};
    auto r = dtw_distance(a, a);
    CHECK(r.cost == Catch::Approx(0.0).margin(1e-12));
    CHECK(r.path_length == 3);
}

TEST_CASE("dtw hand-unrolled small cases") {
    // [0,0] vs [1]: both zeros align against the single 1.
    CHECK(dtw_distance(std::vector<double>{0, 0}, std::vector<double>{1}).cost ==
          Catch::Approx(2.0));
    // Duplicated tail is absorbed by warping.
    CHECK(dtw_distance(std::vector<double>{1, 2, 3, 3}, std::vector<double>{1, 2, 3}).cost ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("dtw empty input is an error") {
    std::vector<double> a{1.0}, e;
    CHECK_THROWS_AS(dtw_distance(e, a), EmptyInputError);
    CHECK_THROWS_AS(dtw_distance(a, e), EmptyInputError);
}

TEST_CASE("dtw equals the memoized recursion oracle") {
    Rng rng(20240601);
    for (int it = 0; it < 200; ++it) {
        auto a = random_series(rng, static_cast<std::size_t>(rng.uniform_int(1, 12)));
        auto b = random_series(rng, static_cast<std::size_t>(rng.uniform_int(1, 12)));
        double dp = dtw_distance(a, b).cost;
        double oracle = test_helpers::dtw_oracle(a, b);
        REQUIRE(dp == Catch::Approx(oracle).margin(1e-9));
    }
}

TEST_CASE("dtw is symmetric and non-negative") {
    Rng rng(7);
    for (int it = 0; it < 50; ++it) {
        auto a = random_series(rng, static_cast<std::size_t>(rng.uniform_int(1, 30)));
        auto b = random_series(rng, static_cast<std::size_t>(rng.uniform_int(1, 30)));
        double ab = dtw_distance(a, b).cost;
        double ba = dtw_distance(b, a).cost;
        CHECK(ab >= 0.0);
        CHECK(ab == Catch::Approx(ba).margin(1e-9));
    }
}

TEST_CASE("warping path is monotone, continuous, and corner-anchored") {
    Rng rng(99);
    for (int it = 0; it < 20; ++it) {
        auto a = random_series(rng, static_cast<std::size_t>(rng.uniform_int(2, 20)));
        auto b = random_series(rng, static_cast<std::size_t>(rng.uniform_int(2, 20)));
        WarpingPath path;
        auto r = dtw_distance(a, b, std::nullopt, &path);
        REQUIRE(path.pairs.size() == r.path_length);
        REQUIRE(path.pairs.front() == std::make_pair(std::size_t{0}, std::size_t{0}));
        REQUIRE(path.pairs.back() == std::make_pair(a.size() - 1, b.size() - 1));
        for (std::size_t k = 1; k < path.pairs.size(); ++k) {
            auto [i0, j0] = path.pairs[k - 1];
            auto [i1, j1] = path.pairs[k];
            std::size_t di = i1 - i0, dj = j1 - j0;
            REQUIRE(di <= 1);
            REQUIRE(dj <= 1);
            REQUIRE(di + dj >= 1);
        }
        // Path cost must reproduce the reported cost.
        double sum = 0;
        for (auto [i, j] : path.pairs) sum += (a[i] - b[j]) * (a[i] - b[j]);
        CHECK(sum == Catch::Approx(r.cost).margin(1e-9));
    }
}

TEST_CASE("banded dtw never undercuts the unconstrained cost") {
    Rng rng(41);
    for (int it = 0; it < 40; ++it) {
        auto a = random_series(rng, static_cast<std::size_t>(rng.uniform_int(2, 25)));
        auto b = random_series(rng, static_cast<std::size_t>(rng.uniform_int(2, 25)));
        double free_cost = dtw_distance(a, b).cost;
        for (int band : {1, 3, 8}) {
            double banded = dtw_distance(a, b, band).cost;
            CHECK(banded >= free_cost - 1e-12);
        }
    }
}

TEST_CASE("mse basics") {
    std::vector<double> a{1, 2, 3};
    CHECK(mse_distance(a, a) == Catch::Approx(0.0));
    CHECK(mse_distance(std::vector<double>{0, 0}, std::vector<double>{1, 1}) ==
          Catch::Approx(1.0));
    CHECK_THROWS_AS(mse_distance(std::vector<double>{1, 2}, std::vector<double>{1}),
                    LengthMismatchError);
}

TEST_CASE("mse blows up on a time shift that dtw absorbs") {
    // Bumpy series against its 2-sample circular shift.
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = 5.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 10.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[(i + 2) % a.size()];
    double mse = mse_distance(a, b);
    // The wrap-around discontinuity costs a few cells; per aligned cell the
    // warp is nearly free, while MSE pays the full phase misalignment.
    CHECK(mse > dtw_distance(a, b).normalized());
    CHECK(mse > 5.0 * dtw_distance(a, b).normalized());
}

TEST_CASE("resample_linear keeps endpoints and length") {
    std::vector<double> x{0, 1, 2, 3};
    auto y = resample_linear(x, 7);
    REQUIRE(y.size() == 7);
    CHECK(y.front() == Catch::Approx(0.0));
    CHECK(y.back() == Catch::Approx(3.0));
}
