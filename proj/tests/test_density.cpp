#include <catch2/catch_amalgamated.hpp>

#include "edm/core/rng.hpp"
#include "edm/density/energy_density.hpp"

#include "test_util.hpp"

using namespace edm;
using namespace edm::density;
using edm::data::IngredientRecord;

namespace {

SegmentationMask random_mask(Rng& rng, int h, int w, int n_labels) {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(h, w, 0);
    for (auto& v : mask.labels)
        v = static_cast<std::uint16_t>(rng.uniform_int(static_cast<std::uint64_t>(n_labels) + 1));
    return mask;
}

} // namespace

TEST_CASE("single ingredient spreads energy uniformly", "[density]") {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(20, 20, 0);
    int painted = 0;
    for (int i = 0; i < 20 && painted < 200; ++i)
        for (int j = 0; j < 20 && painted < 200; ++j) {
            mask.labels(i, j) = 1;
            ++painted;
        }
    REQUIRE(painted == 200);
    auto built = build_raw_density_map(mask, {{"food", 100.0, ""}});
    REQUIRE(built.zero_pixel_ingredients.empty());
    for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) {
            double expected = mask.labels(i, j) == 1 ? 0.5 : 0.0;
            REQUIRE(built.map.values(i, j) == expected);
        }
    REQUIRE(integrate_energy(built.map) == Catch::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("all-background mask builds an all-zero map", "[density]") {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(8, 8, 0);
    auto built = build_raw_density_map(mask, {});
    for (double v : built.map.values) REQUIRE(v == 0.0);
    REQUIRE(integrate_energy(built.map) == 0.0);
}

TEST_CASE("two ingredients get their own per-pixel shares", "[density]") {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(4, 4, 0);
    // 3 pixels of label 1, 8 pixels of label 2
    int ones = 0, twos = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (ones < 3) {
                mask.labels(i, j) = 1;
                ++ones;
            } else if (twos < 8) {
                mask.labels(i, j) = 2;
                ++twos;
            }
        }
    auto built = build_raw_density_map(mask, {{"a", 60.0, ""}, {"b", 40.0, ""}});

    // oracle: brute-force per-pixel accumulation
    double sum = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double v = built.map.values(i, j);
            if (mask.labels(i, j) == 1) REQUIRE(v == 20.0);
            if (mask.labels(i, j) == 2) REQUIRE(v == 5.0);
            if (mask.labels(i, j) == 0) REQUIRE(v == 0.0);
            sum += v;
        }
    REQUIRE(sum == Catch::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("zero-pixel ingredients are reported and contribute nothing", "[density]") {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(4, 4, 1);
    auto built = build_raw_density_map(mask, {{"visible", 50.0, ""}, {"hidden", 25.0, ""}});
    REQUIRE(built.zero_pixel_ingredients == std::vector<int>{2});
    REQUIRE(integrate_energy(built.map) == Catch::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("mask labels beyond the ingredient count are rejected", "[density]") {
    SegmentationMask mask;
    mask.labels = Grid<std::uint16_t>(2, 2, 3);
    REQUIRE_THROWS(build_raw_density_map(mask, {{"a", 10.0, ""}}));
}

TEST_CASE("integrate_energy equals the ingredient sum on random instances", "[density]") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_int(5));
        auto mask = random_mask(rng, 16, 16, n);
        std::vector<IngredientRecord> ingredients;
        for (int k = 0; k < n; ++k)
            ingredients.push_back({"ing" + std::to_string(k), rng.uniform(0.0, 400.0), ""});
        auto built = build_raw_density_map(mask, ingredients);

        // oracle: sum of energies of ingredients with at least one pixel
        std::vector<bool> present(static_cast<std::size_t>(n) + 1, false);
        for (auto v : mask.labels) present[v] = true;
        double expected = 0.0;
        for (int k = 1; k <= n; ++k)
            if (present[k]) expected += ingredients[k - 1].energy_kcal;

        REQUIRE(integrate_energy(built.map) == Catch::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("integrate_energy rejects non-raw maps", "[density]") {
    EnergyDensityMap map;
    map.rep = Representation::Scaled0To255;
    map.values = Grid<double>(2, 2, 10.0);
    REQUIRE_THROWS(integrate_energy(map));
}

TEST_CASE("dataset scale is 255 over the global max", "[density]") {
    auto make_map = [](double max_value) {
        EnergyDensityMap m;
        m.values = Grid<double>(3, 3, 0.0);
        m.values(1, 1) = max_value;
        return m;
    };
    SECTION("arithmetic example") {
        std::vector<EnergyDensityMap> maps = {make_map(2.55)};
        REQUIRE(compute_dataset_scale(maps) == Catch::Approx(100.0));
    }
    SECTION("identity example") {
        std::vector<EnergyDensityMap> maps = {make_map(255.0)};
        REQUIRE(compute_dataset_scale(maps) == 1.0);
    }
    SECTION("matches a brute-force max scan on random maps") {
        Rng rng(5);
        std::vector<EnergyDensityMap> maps;
        double global_max = 0.0;
        for (int m = 0; m < 3; ++m) {
            EnergyDensityMap map;
            map.values = Grid<double>(6, 6);
            for (auto& v : map.values) {
                v = rng.uniform(0.0, 3.0);
                global_max = std::max(global_max, v);
            }
            maps.push_back(map);
        }
        REQUIRE(compute_dataset_scale(maps) == 255.0 / global_max);
    }
    SECTION("all-zero dataset is degenerate") {
        EnergyDensityMap zero;
        zero.values = Grid<double>(3, 3, 0.0);
        std::vector<EnergyDensityMap> maps = {zero};
        REQUIRE_THROWS(compute_dataset_scale(maps));
    }
}

TEST_CASE("scaling chain matches hand evaluation", "[density]") {
    EnergyDensityMap raw;
    raw.rep = Representation::RawKcalPerPixel;
    raw.values = Grid<double>(1, 2, 0.0);
    raw.values(0, 0) = 0.5;

    auto scaled = scale_density_map(raw, Representation::Scaled0To255, 100.0);
    REQUIRE(scaled.values(0, 0) == 50.0);
    REQUIRE(scaled.values(0, 1) == 0.0);
    REQUIRE(scaled.scale_used);

    auto signed_unit = scale_density_map(scaled, Representation::SignedUnit, 100.0);
    REQUIRE(signed_unit.values(0, 0) == Catch::Approx(50.0 / 127.5 - 1.0).epsilon(1e-12));
    REQUIRE(signed_unit.values(0, 0) == Catch::Approx(-0.607843137).epsilon(1e-8));
    REQUIRE(signed_unit.values(0, 1) == -1.0); // zero maps to the range minimum
}

TEST_CASE("representation conversions round trip without clamping", "[density]") {
    Rng rng(31);
    EnergyDensityMap raw;
    raw.rep = Representation::RawKcalPerPixel;
    raw.values = Grid<double>(5, 5);
    for (auto& v : raw.values) v = rng.uniform(0.0, 2.0);
    const double scale = 100.0; // keeps everything below 255

    auto scaled = scale_density_map(raw, Representation::Scaled0To255, scale);
    auto back = scale_density_map(scaled, Representation::RawKcalPerPixel, scale);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            REQUIRE(back.values(i, j) == Catch::Approx(raw.values(i, j)).margin(1e-6));

    auto su = scale_density_map(raw, Representation::SignedUnit, scale);
    auto raw_again = scale_density_map(su, Representation::RawKcalPerPixel, scale);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            REQUIRE(raw_again.values(i, j) == Catch::Approx(raw.values(i, j)).margin(1e-6));
}

TEST_CASE("scaling preserves pixel ordering", "[density]") {
    Rng rng(9);
    EnergyDensityMap raw;
    raw.rep = Representation::RawKcalPerPixel;
    raw.values = Grid<double>(1, 64);
    for (auto& v : raw.values) v = rng.uniform(0.0, 10.0);
    auto su = scale_density_map(raw, Representation::SignedUnit, 12.0);
    for (int j = 0; j + 1 < 64; ++j) {
        if (raw.values(0, j) < raw.values(0, j + 1))
            REQUIRE(su.values(0, j) <= su.values(0, j + 1));
        if (raw.values(0, j) > raw.values(0, j + 1))
            REQUIRE(su.values(0, j) >= su.values(0, j + 1));
    }
}

TEST_CASE("scale_density_map validates its scale", "[density]") {
    EnergyDensityMap raw;
    raw.values = Grid<double>(1, 1, 1.0);
    REQUIRE_THROWS(scale_density_map(raw, Representation::Scaled0To255, 0.0));
    REQUIRE_THROWS(scale_density_map(raw, Representation::Scaled0To255, -2.0));
}

TEST_CASE("density maps persist as float maps and 8-bit images", "[density]") {
    TempDir tmp("density_io");
    EnergyDensityMap raw;
    raw.rep = Representation::RawKcalPerPixel;
    raw.values = Grid<double>(3, 3, 0.0);
    raw.values(0, 0) = 0.25;
    raw.values(2, 2) = 1.0;
    save_density_map(tmp.file("d.raw"), raw);
    auto back = load_density_map(tmp.file("d.raw"));
    REQUIRE(back.rep == Representation::RawKcalPerPixel);
    REQUIRE(back.values(0, 0) == 0.25);

    auto scaled = scale_density_map(raw, Representation::Scaled0To255, 255.0);
    auto q = quantize_scaled(scaled);
    REQUIRE(q(2, 2) == 255);
    REQUIRE(q(0, 0) == 64); // round(63.75)
    io::write_pgm8(tmp.file("d.pgm"), q);
    REQUIRE(io::read_pgm8(tmp.file("d.pgm")) == q);
}
