#include <cmath>
#include <set>

#include "doctest.h"
#include "lsdeconv/fidelity.hpp"
#include "lsdeconv/phantom.hpp"

using namespace lsdeconv;

TEST_CASE("single bead of radius 1 rasterizes to the 7-voxel cross") {
    Volume v = make_beads(9, 9, 9, {1, 1, 1}, 1.0);
    CHECK(v.sum() == doctest::Approx(7.0));
    CHECK(v.at(4, 4, 4) == 1.0);
    CHECK(v.at(5, 4, 4) == 1.0);
    CHECK(v.at(4, 4, 3) == 1.0);
    CHECK(v.at(5, 5, 4) == 0.0);  // diagonal excluded at r=1
}

TEST_CASE("bead grid mass is count times per-sphere volume") {
    Volume one = make_beads(9, 9, 9, {1, 1, 1}, 1.0);
    Volume grid = make_beads(45, 45, 45, {5, 5, 5}, 1.0);
    CHECK(grid.sum() == doctest::Approx(125.0 * one.sum()));
}

TEST_CASE("bead grid is mirror symmetric about the volume centre") {
    Volume v = make_beads(32, 32, 16, {3, 3, 2}, 1.5);
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i)
                CHECK(v.at(i, j, k) == v.at(31 - i, j, k));
}

TEST_CASE("beads that cannot fit raise") {
    CHECK_THROWS_AS(make_beads(8, 8, 8, {5, 5, 5}, 1.5), std::invalid_argument);
}

TEST_CASE("steps: two levels split the volume at 0.5 and 1.0") {
    Volume v = make_steps(4, 4, 8, 2);
    CHECK(v.at(0, 0, 0) == doctest::Approx(0.5));
    CHECK(v.at(3, 3, 3) == doctest::Approx(0.5));
    CHECK(v.at(0, 0, 4) == doctest::Approx(1.0));
    CHECK(v.at(3, 3, 7) == doctest::Approx(1.0));
}

TEST_CASE("steps histogram has exactly n_levels values") {
    Volume v = make_steps(6, 5, 12, 4);
    std::set<double> vals(v.data.begin(), v.data.end());
    CHECK(vals.size() == 4);
    CHECK(*vals.rbegin() == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_steps(4, 4, 4, 1), std::invalid_argument);
}

TEST_CASE("steps TV equals the analytic interface sum") {
    // forward differences: each z-interface contributes jump * nx * ny
    const int nx = 6, ny = 5, nz = 12, levels = 4;
    Volume v = make_steps(nx, ny, nz, levels);
    auto g = grad3(v);
    const double tv = norm1(g[0]) + norm1(g[1]) + norm1(g[2]);
    const double expect = (levels - 1) * (1.0 / levels) * nx * ny;
    CHECK(tv == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cells phantom: deterministic, in range, boundary shell bright") {
    Volume a = make_cells(16, 16, 8, 6, 42);
    Volume b = make_cells(16, 16, 8, 6, 42);
    CHECK(norm2(a - b) == 0.0);
    CHECK(a.min() >= 0.0);
    CHECK(a.max() <= 1.0);
    CHECK(a.at(0, 0, 0) == doctest::Approx(1.0));  // domain boundary is membrane
    Volume c = make_cells(16, 16, 8, 6, 43);
    CHECK(norm2(a - c) > 0.0);  // different seed, different tissue
    CHECK_THROWS_AS(make_cells(8, 8, 8, 0, 1), std::invalid_argument);
}

TEST_CASE("single-cell phantom has no interior membranes") {
    Volume v = make_cells(16, 16, 16, 1, 7);
    // deep interior voxels sit at the dim floor
    CHECK(v.at(8, 8, 8) == doctest::Approx(0.15));
}

TEST_CASE("corrupt: pure Gaussian on a zero volume") {
    Volume zero(40, 40, 40, 0.0);
    NoiseSpec spec;
    spec.sigma_g = 10.0;
    spec.seed = 3;
    auto r = corrupt(zero, spec);
    double mean = r.f.sum() / r.f.size();
    double var = 0.0;
    for (double x : r.f.data) var += (x - mean) * (x - mean);
    var /= r.f.size();
    CHECK(std::abs(mean) < 0.3);            // 3 sigma / sqrt(64000) ~ 0.12
    CHECK(std::sqrt(var) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("corrupt: high-count limit recovers the scaled signal") {
    Volume v = make_steps(12, 12, 8, 3);
    NoiseSpec spec;
    spec.sigma_g = 0.0;
    spec.peak = 1e9;
    auto r = corrupt(v, spec);
    CHECK(r.scale == doctest::Approx(1e9));
    double maxrel = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        maxrel = std::max(maxrel, std::abs(r.f.data[i] / spec.peak - v.data[i]));
    CHECK(maxrel < 1e-3);
}

TEST_CASE("corrupt: Poisson-Gaussian variance additivity at one bright voxel") {
    // repeated draws of a single voxel via fresh seeds
    const double mean = 2000.0, sg = 10.0;
    double acc = 0.0, acc2 = 0.0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        const double x = draw_poisson(mean, 1000 + t, 0) + sg * draw_gaussian(1000 + t, 0);
        acc += x;
        acc2 += x * x;
    }
    const double m = acc / trials;
    const double var = acc2 / trials - m * m;
    CHECK(m == doctest::Approx(mean).epsilon(0.01));
    CHECK(var == doctest::Approx(mean + sg * sg).epsilon(0.15));
}

TEST_CASE("corrupt is deterministic per seed and rejects negatives") {
    Volume v = make_steps(8, 8, 8, 2);
    NoiseSpec spec;
    auto a = corrupt(v, spec);
    auto b = corrupt(v, spec);
    CHECK(norm2(a.f - b.f) == 0.0);
    spec.seed = 2;
    auto c = corrupt(v, spec);
    CHECK(norm2(a.f - c.f) > 0.0);
    Volume neg(2, 2, 2, -1.0);
    CHECK_THROWS_AS(corrupt(neg, spec), std::invalid_argument);
}

TEST_CASE("poisson sampler mean across both regimes") {
    for (double mean : {0.5, 4.0, 50.0, 400.0}) {
        double acc = 0.0;
        const int trials = 4000;
        for (int t = 0; t < trials; ++t) acc += draw_poisson(mean, 77, t);
        CHECK(acc / trials == doctest::Approx(mean).epsilon(0.08));
    }
    CHECK(draw_poisson(0.0, 1, 1) == 0.0);
}
