#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bdk/geometry.hpp"
#include "bdk/noise_model.hpp"

using namespace bdk;

TEST_CASE("estimate_radius: single all-ones vector") {
    std::vector<Vec> samples{Vec(4, 1.0)};
    auto est = estimate_radius(samples);
    CHECK(est.r == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(est.d == 4);
    CHECK(est.n_samples == 1);
}

TEST_CASE("estimate_radius: rejects empty and ragged input") {
    std::vector<Vec> empty;
    CHECK_THROWS_AS(estimate_radius(empty), ValidationError);
    std::vector<Vec> ragged{Vec(3, 1.0), Vec(4, 1.0)};
    CHECK_THROWS_AS(estimate_radius(ragged), ValidationError);
}

TEST_CASE("radius consistency: sigma sqrt(d) within 3 standard errors") {
    Rng root(2024);
    for (int d : {16, 1024, 12288}) {
        for (double sigma : {1.0, 2.5}) {
            auto est = estimate_radius_streaming(d, 400, [&](int i, Vec& out) {
                Rng stream = root.split(static_cast<std::uint64_t>(d)).split(static_cast<std::uint64_t>(i));
                for (double& v : out) v = sigma * stream.normal();
            });
            CHECK(std::abs(est.r - sigma * std::sqrt(static_cast<double>(d))) <=
                  3.0 * est.std_error);
        }
    }
}

TEST_CASE("annulus concentration tightens with dimension") {
    Rng root(77);
    double prev_rel_width = 1e9;
    for (int d : {16, 1024, 12288}) {
        const double sq = std::sqrt(static_cast<double>(d));
        int inside = 0;
        const int n = 1000;
        Vec x(static_cast<std::size_t>(d));
        double lo = 1e18, hi = 0.0;
        for (int i = 0; i < n; ++i) {
            Rng stream = root.split(static_cast<std::uint64_t>(d)).split(static_cast<std::uint64_t>(i));
            for (double& v : x) v = stream.normal();
            const double len = norm(x);
            lo = std::min(lo, len);
            hi = std::max(hi, len);
            if (len >= sq - 5.0 && len <= sq + 5.0) ++inside;
        }
        if (d == 12288) CHECK(inside >= static_cast<int>(0.99 * n));
        const double rel_width = (hi - lo) / sq;
        CHECK(rel_width < prev_rel_width);
        prev_rel_width = rel_width;
    }
}

TEST_CASE("unit sphere measures: closed forms and the vanishing limit") {
    auto m1 = unit_sphere_volume_area(1);
    CHECK(m1.volume == doctest::Approx(2.0).epsilon(1e-12));  // the segment [-1,1]
    auto m2 = unit_sphere_volume_area(2);
    CHECK(m2.volume == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    CHECK(m2.area == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
    auto m3 = unit_sphere_volume_area(3);
    CHECK(m3.volume == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-12));
    CHECK(m3.area == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));

    for (int d = 20; d < 300; ++d)
        CHECK(unit_sphere_volume_area(d + 1).volume < unit_sphere_volume_area(d).volume);
    CHECK(unit_sphere_volume_area(300).volume < 1e-150);
    CHECK_THROWS_AS(unit_sphere_volume_area(0), ValidationError);
}

TEST_CASE("hemisphere slab: limits and the exponential bound") {
    Rng rng(5);
    // c -> 0: nearly the whole hemisphere
    auto nearly_all = hemisphere_slab_fraction(10, 1e-9, 20000, rng);
    CHECK(nearly_all.fraction == doctest::Approx(1.0).epsilon(0.05));

    auto f2 = hemisphere_slab_fraction(50, 2.0, 100000, rng);
    CHECK(f2.bound == doctest::Approx((2.0 / 2.0) * std::exp(-2.0)).epsilon(1e-12));
    CHECK(f2.fraction <= f2.bound + 3.0 * f2.std_error);

    auto f4 = hemisphere_slab_fraction(50, 4.0, 100000, rng);
    CHECK(f4.bound == doctest::Approx(0.5 * std::exp(-8.0)).epsilon(1e-12));
    CHECK(f4.fraction <= f4.bound + 3.0 * f4.std_error);

    CHECK_THROWS_AS(hemisphere_slab_fraction(1, 2.0, 10, rng), ValidationError);
    CHECK_THROWS_AS(hemisphere_slab_fraction(10, 2.0, 0, rng), ValidationError);
}

TEST_CASE("random projection: full space is exact, k=d/2 far below the bound") {
    Rng rng(6);
    auto full = random_projection_check(64, 64, 500, 0.5, rng);
    CHECK(full.failure_rate == 0.0);
    CHECK(full.mean_sq_len == doctest::Approx(1.0).epsilon(1e-12));

    auto half = random_projection_check(1000, 500, 10000, 0.5, rng);
    CHECK(half.bound == doctest::Approx(4.0 * std::exp(-500.0 * 0.25 / 64.0)).epsilon(1e-12));
    CHECK(half.failure_rate <= half.bound);
    CHECK(half.failure_rate < 0.01);  // empirically far below

    // k = 100 makes the bound vacuous (> 1); only nonnegativity is meaningful
    auto vac = random_projection_check(1000, 100, 2000, 0.5, rng);
    CHECK(vac.bound > 1.0);
    CHECK(vac.failure_rate >= 0.0);

    CHECK_THROWS_AS(random_projection_check(10, 11, 100, 0.5, rng), ValidationError);
}

TEST_CASE("slerp: endpoints, the 45-degree case, and norm bounds") {
    Vec a{1.0, 0.0, 0.0};
    Vec b{0.0, 1.0, 0.0};
    CHECK(slerp(a, b, 0.0) == a);
    CHECK(slerp(a, b, 1.0) == b);
    auto mid = slerp(a, b, 0.5);
    CHECK(mid[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(mid[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(mid[2] == 0.0);

    // norm interpolates between the endpoint norms
    Vec a2{3.0, 0.0};
    Vec b2{0.0, 1.0};
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const double lam = rng.uniform();
        const double n = norm(slerp(a2, b2, lam));
        CHECK(n >= 1.0 - 1e-12);
        CHECK(n <= 3.0 + 1e-12);
        CHECK(n == doctest::Approx((1.0 - lam) * 3.0 + lam * 1.0).epsilon(1e-9));
    }

    Vec zero{0.0, 0.0};
    CHECK_THROWS_AS(slerp(a2, zero, 0.5), ValidationError);
    Vec anti{-2.0, 0.0};
    CHECK_THROWS_WITH_AS(slerp(Vec{1.0, 0.0}, anti, 0.5), doctest::Contains("antipodal"),
                         ValidationError);

    // parallel endpoints: no arc needed, linear norm interpolation
    auto par = slerp(Vec{2.0, 0.0}, Vec{4.0, 0.0}, 0.25);
    CHECK(par[0] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("radius scan on a zero model: analytic rescale law") {
    auto s = default_schedule(50);
    auto m = init_predictor({4, 8, 2, 8, 4}, 4, 1);
    for (auto& p : m.params) p = 0.0f;

    Rng rng(9);
    std::vector<LatentState> starts;
    for (int i = 0; i < 20; ++i) {
        Rng stream = rng.split(static_cast<std::uint64_t>(i));
        starts.push_back({sample_standard_latent(4, stream), 50, LatentSource::sampled});
    }
    auto scan = radius_scan(m, s, starts, TrajectoryMode::deterministic,
                            StochasticKernel::implicit_eta1, 10, rng.split(99));
    REQUIRE(scan.entries.size() == 6);
    const double rT = scan.entries.front().r;
    for (const auto& e : scan.entries) {
        const double expect = std::sqrt(s.alpha_bar_at(e.step) / s.alpha_bar_at(50)) * rT;
        CHECK(e.r == doctest::Approx(expect).epsilon(1e-9));
    }
    // forward-looking shifts: last entry carries none
    CHECK(scan.entries.back().has_delta == false);
    CHECK(scan.entries.front().has_delta == true);
    CHECK(scan.entries[0].delta_r ==
          doctest::Approx(scan.entries[0].r - scan.entries[1].r).epsilon(1e-12));
}

TEST_CASE("radius scan: validates starts and stride") {
    auto s = default_schedule(50);
    auto m = init_predictor({4, 8, 2, 8, 4}, 4, 1);
    Rng rng(1);
    std::vector<LatentState> off{{sample_standard_latent(4, rng), 30, LatentSource::sampled}};
    CHECK_THROWS_AS(radius_scan(m, s, off, TrajectoryMode::deterministic,
                                StochasticKernel::implicit_eta1, 10, rng),
                    ValidationError);
    std::vector<LatentState> none;
    CHECK_THROWS_AS(radius_scan(m, s, none, TrajectoryMode::deterministic,
                                StochasticKernel::implicit_eta1, 10, rng),
                    ValidationError);
}
