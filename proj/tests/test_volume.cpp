#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lsdeconv/volume.hpp"
#include "lsdeconv/volume_io.hpp"
#include "test_util.hpp"

using namespace lsdeconv;

TEST_CASE("volume indexing is x-fastest") {
    Volume v(3, 4, 5);
    CHECK(v.idx(1, 0, 0) == 1);
    CHECK(v.idx(0, 1, 0) == 3);
    CHECK(v.idx(0, 0, 1) == 12);
    CHECK(v.size() == 60);
}

TEST_CASE("volume rejects non-positive dims") {
    CHECK_THROWS_AS(Volume(0, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(Volume(4, -1, 4), std::invalid_argument);
}

TEST_CASE("dot accumulates in double and checks dims") {
    Volume a(2, 2, 2, 1.0), b(2, 2, 2, 3.0);
    CHECK(dot(a, b) == doctest::Approx(24.0));
    Volume c(2, 2, 3);
    CHECK_THROWS_AS(dot(a, c), std::invalid_argument);
}

TEST_CASE("norms and arithmetic") {
    Volume a(2, 1, 1);
    a.data = {3.0, -4.0};
    CHECK(norm2(a) == doctest::Approx(5.0));
    CHECK(norm1(a) == doctest::Approx(7.0));
    CHECK(norm_inf(a) == doctest::Approx(4.0));
    Volume b = a;
    b.axpy(2.0, a);
    CHECK(b.data[0] == doctest::Approx(9.0));
    CHECK((a - a).data[1] == 0.0);
}

TEST_CASE("mip picks per-pixel maxima along each axis") {
    Volume v(2, 3, 4);
    v.at(1, 2, 3) = 7.0;
    v.at(0, 0, 0) = 2.0;
    auto mz = mip(v, 2);
    CHECK(mz.rows == 3);
    CHECK(mz.cols == 2);
    CHECK(mz.at(2, 1) == 7.0);
    CHECK(mz.at(0, 0) == 2.0);
    auto mx = mip(v, 0);
    CHECK(mx.rows == 4);
    CHECK(mx.cols == 3);
    CHECK(mx.at(3, 2) == 7.0);
    CHECK_THROWS_AS(mip(v, 3), std::invalid_argument);
}

TEST_CASE("save/load round-trips f32-representable data bitwise") {
    std::mt19937_64 rng(11);
    Volume v = testutil::random_volume(5, 4, 3, rng);
    // snap to float so the f32 payload is lossless
    for (double& x : v.data) x = static_cast<float>(x);
    v.pitch = {0.325, 0.325, 1.0};
    auto stem = (std::filesystem::temp_directory_path() / "lsdeconv_vol_rt").string();
    save_volume(v, stem);
    Volume w = load_volume(stem);
    REQUIRE(w.same_dims(v));
    CHECK(w.pitch[0] == doctest::Approx(0.325));
    for (size_t i = 0; i < v.size(); ++i) CHECK(w.data[i] == v.data[i]);
    std::remove((stem + ".json").c_str());
    std::remove((stem + ".raw").c_str());
}

TEST_CASE("load rejects truncated payload") {
    Volume v(4, 4, 2, 1.5);
    auto stem = (std::filesystem::temp_directory_path() / "lsdeconv_vol_trunc").string();
    save_volume(v, stem);
    std::filesystem::resize_file(stem + ".raw", 10);
    CHECK_THROWS(load_volume(stem));
    std::remove((stem + ".json").c_str());
    std::remove((stem + ".raw").c_str());
}

TEST_CASE("load rejects missing file") {
    CHECK_THROWS(load_volume("/nonexistent/path/vol"));
}

TEST_CASE("to_u8 min-max normalizes") {
    Image2D img;
    img.rows = 1;
    img.cols = 3;
    img.data = {0.0, 0.5, 1.0};
    auto u8 = to_u8(img);
    CHECK(u8[0] == 0);
    CHECK(u8[2] == 255);
}

TEST_CASE("minimal TIFF import") {
    // hand-rolled little-endian classic TIFF: one 2x2 u16 page, one strip
    auto path = (std::filesystem::temp_directory_path() / "lsdeconv_t.tif").string();
    std::ofstream os(path, std::ios::binary);
    auto w16 = [&](uint16_t x) { os.write(reinterpret_cast<char*>(&x), 2); };
    auto w32 = [&](uint32_t x) { os.write(reinterpret_cast<char*>(&x), 4); };
    os.write("II", 2); w16(42); w32(16);       // header, IFD at 16
    uint16_t px[4] = {10, 20, 30, 40};
    os.write(reinterpret_cast<char*>(px), 8);  // pixel data at offset 8
    w16(8);                                    // 8 IFD entries
    auto entry = [&](uint16_t tag, uint16_t type, uint32_t count, uint32_t val) {
        w16(tag); w16(type); w32(count); w32(val);
    };
    entry(256, 3, 1, 2);    // width
    entry(257, 3, 1, 2);    // height
    entry(258, 3, 1, 16);   // bits per sample
    entry(259, 3, 1, 1);    // no compression
    entry(262, 3, 1, 1);    // photometric
    entry(273, 4, 1, 8);    // strip offset
    entry(278, 3, 1, 2);    // rows per strip
    entry(279, 4, 1, 8);    // strip byte count
    w32(0);                 // no next IFD
    os.close();
    Volume v = load_tiff_u16(path);
    CHECK(v.nx == 2);
    CHECK(v.ny == 2);
    CHECK(v.nz == 1);
    CHECK(v.at(0, 0, 0) == 10.0);
    CHECK(v.at(1, 1, 0) == 40.0);
    std::remove(path.c_str());
}
