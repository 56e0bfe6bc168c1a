#include <random>

#include "doctest.h"
#include "lsdeconv/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lsdeconv;

TEST_CASE("l2_error basics") {
    Volume u0(4, 4, 4, 2.0);
    CHECK(l2_error(u0, u0) == doctest::Approx(0.0));
    Volume twice = u0;
    twice *= 2.0;
    CHECK(l2_error(twice, u0) == doctest::Approx(1.0));
    CHECK(l2_error(Volume(4, 4, 4, 0.0), u0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(l2_error(u0, Volume(4, 4, 4, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(l2_error(u0, Volume(4, 4, 5, 1.0)), std::invalid_argument);
}

TEST_CASE("ssim of identical volumes is one; symmetric") {
    std::mt19937_64 rng(31);
    Volume u = testutil::random_volume(9, 9, 9, rng, 0.0, 1.0);
    CHECK(ssim3(u, u) == doctest::Approx(1.0));
    Volume w = testutil::random_volume(9, 9, 9, rng, 0.0, 1.0);
    // symmetric once the dynamic range is pinned (the default derives it from
    // the reference argument)
    CHECK(ssim3(u, w, 7, 1.5, 1.0) == doctest::Approx(ssim3(w, u, 7, 1.5, 1.0)));
}

TEST_CASE("constant offset with fixed dynamic range lowers ssim") {
    std::mt19937_64 rng(32);
    Volume u0 = testutil::random_volume(9, 9, 9, rng, 0.0, 1.0);
    Volume shifted = u0;
    for (double& x : shifted.data) x += 5.0;
    CHECK(ssim3(shifted, u0, 7, 1.5, 1.0) < 0.5);
}

TEST_CASE("ssim matches the naive windowed-loop oracle") {
    std::mt19937_64 rng(33);
    for (int t = 0; t < 3; ++t) {
        Volume a = testutil::random_volume(8, 8, 8, rng, 0.0, 1.0);
        Volume b = a;
        b.axpy(0.2, testutil::random_volume(8, 8, 8, rng));
        const double fast = ssim3(a, b, 5, 1.5, 1.0);
        const double slow = oracle::naive_ssim3(a, b, 5, 1.5, 1.0);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    }
}

TEST_CASE("ssim window validation") {
    Volume u(4, 4, 4, 1.0);
    CHECK_THROWS_AS(ssim3(u, u, 7), std::invalid_argument);   // volume too small
    Volume v(9, 9, 9, 1.0);
    CHECK_THROWS_AS(ssim3(v, v, 4), std::invalid_argument);   // even window
    CHECK_THROWS_AS(ssim3(v, v, 1), std::invalid_argument);   // below minimum
}

TEST_CASE("psnr is infinite for exact match and decreases with noise") {
    std::mt19937_64 rng(34);
    Volume u0 = testutil::random_volume(6, 6, 6, rng, 0.0, 1.0);
    CHECK(std::isinf(psnr(u0, u0)));
    Volume n1 = u0, n2 = u0;
    n1.axpy(0.01, testutil::random_volume(6, 6, 6, rng));
    n2.axpy(0.10, testutil::random_volume(6, 6, 6, rng));
    CHECK(psnr(n1, u0) > psnr(n2, u0));
}

TEST_CASE("evaluate fills the full report") {
    std::mt19937_64 rng(35);
    Volume u0 = testutil::random_volume(8, 8, 8, rng, 0.0, 1.0);
    Volume u = u0;
    u.axpy(0.05, testutil::random_volume(8, 8, 8, rng));
    auto r = evaluate(u, u0);
    CHECK(r.l2_normalized > 0.0);
    CHECK(r.ssim > -1.0);
    CHECK(r.ssim <= 1.0);
    CHECK(r.psnr > 0.0);
}
