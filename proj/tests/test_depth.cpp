#include <catch2/catch_amalgamated.hpp>

#include "edm/core/rng.hpp"
#include "edm/depth/depth.hpp"
#include "edm/depth/morphology.hpp"

#include "test_util.hpp"

using namespace edm;
using namespace edm::depth;

namespace {

// Reference morphology: direct neighborhood scan.
Grid<double> brute_dilate(const Grid<double>& src, int k) {
    int r = k / 2;
    Grid<double> out(src.height(), src.width());
    for (int i = 0; i < src.height(); ++i)
        for (int j = 0; j < src.width(); ++j) {
            double best = src(i, j);
            for (int di = -r; di <= r; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= src.height() || jj < 0 || jj >= src.width()) continue;
                    best = std::max(best, src(ii, jj));
                }
            out(i, j) = best;
        }
    return out;
}

Grid<double> brute_erode(const Grid<double>& src, int k) {
    int r = k / 2;
    Grid<double> out(src.height(), src.width());
    for (int i = 0; i < src.height(); ++i)
        for (int j = 0; j < src.width(); ++j) {
            double best = src(i, j);
            for (int di = -r; di <= r; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= src.height() || jj < 0 || jj >= src.width()) continue;
                    best = std::min(best, src(ii, jj));
                }
            out(i, j) = best;
        }
    return out;
}

DepthMap make_map(const Grid<double>& values) {
    DepthMap m;
    m.rep = Representation::RawU16;
    m.values = values;
    m.missing = Grid<std::uint8_t>(values.height(), values.width(), 0);
    for (int i = 0; i < values.height(); ++i)
        for (int j = 0; j < values.width(); ++j)
            if (values(i, j) == 0.0) m.missing(i, j) = 1;
    return m;
}

} // namespace

TEST_CASE("decode preserves 16-bit values and flags zeros as missing", "[depth]") {
    TempDir tmp("depthdec");
    Grid<std::uint16_t> raw(6, 6, 1000);
    raw(2, 3) = 0;
    io::write_pgm16(tmp.file("d.pgm"), raw);
    auto map = decode_depth(tmp.file("d.pgm"));
    REQUIRE(map.rep == Representation::RawU16);
    REQUIRE(map.values(0, 0) == 1000.0);
    REQUIRE(map.missing(2, 3) == 1);
    REQUIRE(map.missing(0, 0) == 0);
}

TEST_CASE("depth encode/decode is bit-exact on random grids", "[depth]") {
    TempDir tmp("depthrt");
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        Grid<std::uint16_t> raw(9, 11);
        for (auto& v : raw) v = static_cast<std::uint16_t>(rng.uniform_int(65536));
        io::write_pgm16(tmp.file("d.pgm"), raw);
        auto map = decode_depth(tmp.file("d.pgm"));
        encode_depth(tmp.file("d2.pgm"), map);
        auto again = io::read_pgm16(tmp.file("d2.pgm"));
        REQUIRE(again == raw);
    }
}

TEST_CASE("decode rejects 8-bit input", "[depth]") {
    TempDir tmp("depth8");
    Grid<std::uint8_t> g(3, 3, 7);
    io::write_pgm8(tmp.file("d.pgm"), g);
    REQUIRE_THROWS(decode_depth(tmp.file("d.pgm")));
}

TEST_CASE("raw units convert to meters at 1e-4 m per unit", "[depth]") {
    DepthMap m = make_map(Grid<double>(2, 2, 1000.0));
    m.values(0, 1) = 0.0;
    m.values(1, 0) = 65535.0;
    auto meters = depth_to_meters(m);
    REQUIRE(meters.rep == Representation::Meters);
    REQUIRE(meters.values(0, 0) == Catch::Approx(0.1).epsilon(1e-12)); // 10 cm
    REQUIRE(meters.values(0, 1) == 0.0);
    REQUIRE(meters.values(1, 0) == Catch::Approx(6.5535).epsilon(1e-12));
}

TEST_CASE("unit kernels are the identity post-process", "[depth]") {
    Rng rng(3);
    Grid<double> values(7, 7);
    for (auto& v : values) v = static_cast<double>(rng.uniform_int(3000));
    DepthMap m = make_map(values);
    auto out = postprocess_depth(m, 1, 1);
    REQUIRE(out.values == values);
}

TEST_CASE("closing fills a single interior hole", "[depth]") {
    Grid<double> values(5, 5, 1000.0);
    values(2, 2) = 0.0;
    DepthMap m = make_map(values);
    REQUIRE(m.missing(2, 2) == 1);
    auto out = postprocess_depth(m, 1, 3);
    REQUIRE(out.values(2, 2) == 1000.0);
    REQUIRE(out.missing(2, 2) == 0); // filled pixels lose the missing flag
}

TEST_CASE("constant maps are morphology fixed points", "[depth]") {
    DepthMap m = make_map(Grid<double>(6, 8, 1234.0));
    for (int k : {1, 3, 5}) {
        auto out = postprocess_depth(m, k, k);
        REQUIRE(out.values == m.values);
    }
}

TEST_CASE("even kernels are rejected", "[depth]") {
    DepthMap m = make_map(Grid<double>(4, 4, 5.0));
    REQUIRE_THROWS(postprocess_depth(m, 2, 3));
    REQUIRE_THROWS(postprocess_depth(m, 3, 4));
}

TEST_CASE("separable morphology matches brute force on random grids", "[depth]") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        int h = 2 + static_cast<int>(rng.uniform_int(7));
        int w = 2 + static_cast<int>(rng.uniform_int(7));
        Grid<double> g(h, w);
        for (auto& v : g) v = static_cast<double>(rng.uniform_int(4));
        for (int k : {3, 5}) {
            REQUIRE(dilate(g, k) == brute_dilate(g, k));
            REQUIRE(erode(g, k) == brute_erode(g, k));
            REQUIRE(close(g, k) == brute_erode(brute_dilate(g, k), k));
        }
    }
}

TEST_CASE("dilation and closing are monotone", "[depth]") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Grid<double> a(8, 8), b(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                a(i, j) = rng.uniform(0.0, 100.0);
                b(i, j) = a(i, j) + rng.uniform(0.0, 10.0); // pointwise >= a
            }
        auto da = dilate(a, 3), db = dilate(b, 3);
        auto ca = close(a, 3), cb = close(b, 3);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                REQUIRE(da(i, j) <= db(i, j));
                REQUIRE(ca(i, j) <= cb(i, j));
            }
    }
}

TEST_CASE("normalization maps the sensor range onto [-1, 1]", "[depth]") {
    Grid<double> values(1, 4, 0.0);
    values(0, 1) = 65535.0;
    values(0, 2) = 32768.0;
    values(0, 3) = 12000.0;
    DepthMap m = make_map(values);
    auto n = normalize_depth(m);
    REQUIRE(n.rep == Representation::SignedUnit);
    REQUIRE(n.values(0, 0) == -1.0);
    REQUIRE(n.values(0, 1) == 1.0);
    // oracle: direct evaluation of v / 32767.5 - 1
    REQUIRE(n.values(0, 2) == Catch::Approx(32768.0 / 32767.5 - 1.0).epsilon(1e-12));
    REQUIRE(n.values(0, 2) == Catch::Approx(1.5259022e-5).epsilon(1e-6));
}

TEST_CASE("normalization is strictly increasing", "[depth]") {
    Grid<double> values(1, 3, 0.0);
    values(0, 0) = 10.0;
    values(0, 1) = 11.0;
    values(0, 2) = 60000.0;
    auto n = normalize_depth(make_map(values));
    REQUIRE(n.values(0, 0) < n.values(0, 1));
    REQUIRE(n.values(0, 1) < n.values(0, 2));
}

TEST_CASE("normalize and to-meters require raw representation", "[depth]") {
    DepthMap m = make_map(Grid<double>(2, 2, 100.0));
    auto n = normalize_depth(m);
    REQUIRE_THROWS(normalize_depth(n));
    REQUIRE_THROWS(depth_to_meters(n));
}
