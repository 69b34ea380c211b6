#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "edm/core/grid.hpp"
#include "edm/core/image_io.hpp"
#include "edm/core/rng.hpp"
#include "edm/data/manifest.hpp"
#include "edm/data/metadata.hpp"

// Synthetic overhead eating scenes with exact ground truth: a plate disk on a
// table, one or two non-overlapping food regions, a label mask, a 16-bit
// depth map and a metadata row per dish. Ingredient energy is exactly
// kcal-per-pixel times rasterized pixel count, so density-map construction
// and energy integration are verifiable to numerical precision.

namespace edm::synth {

struct FoodSpec {
    std::string name;
    std::array<std::uint8_t, 3> color;
    double kcal_per_pixel = 0.0;
    int height_units = 0; // depth units (1e-4 m) above the plate plane
};

inline std::vector<FoodSpec> default_palette() {
    return {
        {"rice", {235, 228, 200}, 0.35, 180},
        {"greens", {70, 140, 60}, 0.22, 260},
        {"chicken", {190, 140, 80}, 0.85, 220},
        {"pasta", {230, 200, 90}, 0.55, 200},
        {"beef", {120, 70, 50}, 1.10, 240},
        {"beans", {150, 90, 60}, 0.45, 160},
    };
}

struct SynthConfig {
    int n_dishes = 16;
    int image_side = 64;
    std::vector<FoodSpec> palette = default_palette();
    int max_foods_per_dish = 2; // curation keeps dishes with fewer than 3 foods
    std::uint64_t seed = 0;

    int plate_plane_units = 3000;   // 0.3 m overhead rig
    double speckle_fraction = 0.02; // food pixels dropped to 0 (missing reading)
    int min_food_pixels = 60;

    void validate() const {
        require(n_dishes >= 1, "SynthConfig: n_dishes must be >= 1");
        require(image_side >= 32, "SynthConfig: image_side must be >= 32");
        require(!palette.empty(), "SynthConfig: palette must not be empty");
        for (const auto& f : palette) {
            require(f.kcal_per_pixel > 0.0, "SynthConfig: palette energy densities must be positive");
            require(f.height_units > 0 && f.height_units < plate_plane_units,
                    "SynthConfig: food height must be positive and below the plate plane");
        }
        require(max_foods_per_dish >= 1, "SynthConfig: max_foods_per_dish must be >= 1");
        require(speckle_fraction >= 0.0 && speckle_fraction < 1.0,
                "SynthConfig: speckle_fraction must be in [0, 1)");
        require(min_food_pixels >= 1, "SynthConfig: min_food_pixels must be >= 1");
    }
};

namespace detail {

struct Ellipse {
    double cx, cy, rx, ry, angle;

    bool contains(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        double c = std::cos(angle), s = std::sin(angle);
        double u = (dx * c + dy * s) / rx;
        double v = (-dx * s + dy * c) / ry;
        return u * u + v * v <= 1.0;
    }
    double bounding_radius() const { return std::max(rx, ry); }
};

inline std::uint8_t jitter(Rng& rng, int base, int amount) {
    int v = base + rng.uniform_int(-amount, amount);
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

} // namespace detail

struct SynthDish {
    data::DishRecord record;
    RgbImage rgb;
    Grid<std::uint16_t> depth;
    Grid<std::uint8_t> mask;
};

inline SynthDish generate_dish(const SynthConfig& config, const std::string& dish_id, Rng rng) {
    const int side = config.image_side;
    const double plate_r = 0.44 * side;
    const double plate_cx = side / 2.0, plate_cy = side / 2.0;

    SynthDish dish;
    dish.record.dish_id = dish_id;
    dish.rgb = RgbImage(side, side);
    dish.depth = Grid<std::uint16_t>(side, side,
                                     static_cast<std::uint16_t>(config.plate_plane_units));
    dish.mask = Grid<std::uint8_t>(side, side, 0);

    // table and plate are purely visual; the depth plane is flat
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            double d = std::hypot(i - plate_cy, j - plate_cx);
            bool on_plate = d <= plate_r;
            int base_r = on_plate ? 212 : 96;
            int base_g = on_plate ? 210 : 72;
            int base_b = on_plate ? 204 : 54;
            dish.rgb.at(i, j, 0) = detail::jitter(rng, base_r, 6);
            dish.rgb.at(i, j, 1) = detail::jitter(rng, base_g, 6);
            dish.rgb.at(i, j, 2) = detail::jitter(rng, base_b, 6);
        }
    }

    const int n_foods = rng.uniform_int(1, config.max_foods_per_dish);
    std::vector<detail::Ellipse> placed;
    for (int k = 1; k <= n_foods; ++k) {
        const FoodSpec& food = config.palette[rng.uniform_int(config.palette.size())];
        long long pixels = 0;
        detail::Ellipse e{};
        for (int attempt = 0; attempt < 64; ++attempt) {
            double r_lo = std::sqrt(static_cast<double>(config.min_food_pixels)) * 0.75;
            double r_hi = plate_r * (n_foods == 1 ? 0.62 : 0.45);
            e.rx = rng.uniform(r_lo, r_hi);
            e.ry = rng.uniform(r_lo, r_hi);
            e.angle = rng.uniform(0.0, 3.141592653589793);
            double margin = e.bounding_radius() + 2.0;
            if (margin >= plate_r) continue;
            double rad = rng.uniform(0.0, plate_r - margin);
            double theta = rng.uniform(0.0, 2.0 * 3.141592653589793);
            e.cx = plate_cx + rad * std::cos(theta);
            e.cy = plate_cy + rad * std::sin(theta);

            bool overlaps = false;
            for (const auto& other : placed)
                if (std::hypot(e.cx - other.cx, e.cy - other.cy) <=
                    e.bounding_radius() + other.bounding_radius() + 2.0)
                    overlaps = true;
            if (overlaps) continue;

            // rasterize onto unlabeled pixels only
            pixels = 0;
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j)
                    if (dish.mask(i, j) == 0 && e.contains(j, i)) ++pixels;
            if (pixels >= config.min_food_pixels) break;
            pixels = 0;
        }
        expect(pixels >= config.min_food_pixels,
               "generate_dish: could not place food region for " + dish_id);
        placed.push_back(e);

        for (int i = 0; i < side; ++i) {
            for (int j = 0; j < side; ++j) {
                if (dish.mask(i, j) != 0 || !e.contains(j, i)) continue;
                dish.mask(i, j) = static_cast<std::uint8_t>(k);
                dish.depth(i, j) =
                    static_cast<std::uint16_t>(config.plate_plane_units - food.height_units);
                dish.rgb.at(i, j, 0) = detail::jitter(rng, food.color[0], 10);
                dish.rgb.at(i, j, 1) = detail::jitter(rng, food.color[1], 10);
                dish.rgb.at(i, j, 2) = detail::jitter(rng, food.color[2], 10);
                if (config.speckle_fraction > 0.0 && rng.uniform() < config.speckle_fraction)
                    dish.depth(i, j) = 0; // dropped sensor reading
            }
        }

        data::IngredientRecord ing;
        ing.name = food.name;
        ing.energy_kcal = food.kcal_per_pixel * static_cast<double>(pixels);
        ing.category = food.name;
        dish.record.ingredients.push_back(ing);
    }

    dish.record.total_energy_kcal = 0.0;
    for (const auto& ing : dish.record.ingredients)
        dish.record.total_energy_kcal += ing.energy_kcal;
    return dish;
}

// Emits the on-disk layout shared with real data (metadata.csv, rgb/, depth/,
// mask/, manifest.json) and returns the manifest. Fully deterministic: the
// same config yields byte-identical outputs.
inline data::DatasetManifest generate_synthetic_dataset(const SynthConfig& config,
                                                        const std::string& out_dir) {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/rgb");
    fs::create_directories(out_dir + "/depth");
    fs::create_directories(out_dir + "/mask");

    Rng master(config.seed);
    data::DatasetManifest manifest;
    manifest.seed = config.seed;

    for (int d = 0; d < config.n_dishes; ++d) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%05d", d);
        std::string dish_id = "dish_" + std::string(buf);

        // bounded retries with fresh shapes when placement fails
        SynthDish dish;
        bool done = false;
        for (int regen = 0; regen < 16 && !done; ++regen) {
            try {
                dish = generate_dish(config, dish_id,
                                     master.derive(static_cast<std::uint64_t>(d) * 131 + regen));
                done = true;
            } catch (const std::runtime_error&) {
                // retry with a fresh derived stream
            }
        }
        expect(done, "generate_synthetic_dataset: placement failed repeatedly for " + dish_id);

        io::write_ppm8(out_dir + "/rgb/" + dish_id + ".ppm", dish.rgb);
        io::write_pgm16(out_dir + "/depth/" + dish_id + ".pgm", dish.depth);
        io::write_pgm8(out_dir + "/mask/" + dish_id + ".pgm", dish.mask);

        dish.record.rgb_path = out_dir + "/rgb/" + dish_id + ".ppm";
        dish.record.depth_path = out_dir + "/depth/" + dish_id + ".pgm";
        dish.record.mask_path = out_dir + "/mask/" + dish_id + ".pgm";
        manifest.records.push_back(dish.record);
    }

    data::save_metadata_csv(out_dir + "/metadata.csv", manifest.records);
    data::write_manifest(out_dir + "/manifest.json", manifest);
    return manifest;
}

} // namespace edm::synth
