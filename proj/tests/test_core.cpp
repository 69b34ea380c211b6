#include <catch2/catch_amalgamated.hpp>

#include "edm/core/grid.hpp"
#include "edm/core/image_io.hpp"
#include "edm/core/resize.hpp"
#include "edm/core/rng.hpp"
#include "edm/core/strings.hpp"

#include "test_util.hpp"

using namespace edm;

TEST_CASE("pgm16 round trips random grids bit-exactly", "[core]") {
    TempDir tmp("pgm16");
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        int h = 1 + static_cast<int>(rng.uniform_int(40));
        int w = 1 + static_cast<int>(rng.uniform_int(40));
        Grid<std::uint16_t> g(h, w);
        for (auto& v : g) v = static_cast<std::uint16_t>(rng.uniform_int(65536));
        std::string path = tmp.file("g.pgm");
        io::write_pgm16(path, g);
        auto back = io::read_pgm16(path);
        REQUIRE(back == g);
    }
}

TEST_CASE("pgm8 and ppm8 round trip", "[core]") {
    TempDir tmp("pnm8");
    Rng rng(3);
    Grid<std::uint8_t> g(7, 9);
    for (auto& v : g) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    io::write_pgm8(tmp.file("g.pgm"), g);
    REQUIRE(io::read_pgm8(tmp.file("g.pgm")) == g);

    RgbImage img(5, 6);
    for (auto& v : img.px) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    io::write_ppm8(tmp.file("i.ppm"), img);
    REQUIRE(io::read_ppm8(tmp.file("i.ppm")) == img);
}

TEST_CASE("reading an 8-bit file as 16-bit depth fails", "[core]") {
    TempDir tmp("pgmmix");
    Grid<std::uint8_t> g(3, 3, 7);
    io::write_pgm8(tmp.file("g.pgm"), g);
    REQUIRE_THROWS(io::read_pgm16(tmp.file("g.pgm")));
    Grid<std::uint16_t> g16(3, 3, 7);
    io::write_pgm16(tmp.file("g16.pgm"), g16);
    REQUIRE_THROWS(io::read_pgm8(tmp.file("g16.pgm")));
}

TEST_CASE("float map container round trips and keeps its tag", "[core]") {
    TempDir tmp("fmap");
    Grid<double> g(4, 5);
    Rng rng(9);
    for (auto& v : g) v = static_cast<float>(rng.uniform(-2.0, 2.0)); // f32-representable
    io::write_float_map(tmp.file("m.raw"), g, 2);
    std::uint32_t tag = 0;
    auto back = io::read_float_map(tmp.file("m.raw"), &tag);
    REQUIRE(tag == 2);
    REQUIRE(back == g);
}

TEST_CASE("rng streams are deterministic and derived streams differ", "[core]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    Rng c = Rng(42).derive(1), d = Rng(42).derive(2);
    REQUIRE(c.next_u64() != d.next_u64());
}

TEST_CASE("rng shuffle is a permutation", "[core]") {
    Rng rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto orig = v;
    rng.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == orig);
}

TEST_CASE("bilinear resize preserves constants and endpoints", "[core]") {
    Grid<double> g(8, 8, 3.25);
    auto r = resize_bilinear(g, 5, 13);
    for (double v : r) REQUIRE(v == Catch::Approx(3.25));
    // identity when shape matches
    auto same = resize_bilinear(g, 8, 8);
    REQUIRE(same == g);
}

TEST_CASE("format_double round trips through parse_double", "[core]") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        double v = rng.uniform(-1e6, 1e6);
        REQUIRE(parse_double(format_double(v)) == v);
    }
}
