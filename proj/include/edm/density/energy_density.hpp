#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edm/core/grid.hpp"
#include "edm/core/image_io.hpp"
#include "edm/data/records.hpp"

namespace edm::density {

// Label grid: 0 = background, k in [1, N] = the k-th ingredient.
struct SegmentationMask {
    Grid<std::uint16_t> labels;

    int max_label() const {
        std::uint16_t m = 0;
        for (auto v : labels) m = std::max(m, v);
        return m;
    }
};

enum class Representation : std::uint32_t {
    RawKcalPerPixel = 0, // y(i,j) in kcal per pixel, background 0
    Scaled0To255 = 1,    // dataset-scaled to [0, 255]
    SignedUnit = 2,      // linearly mapped to [-1, 1]
};

struct EnergyDensityMap {
    Representation rep = Representation::RawKcalPerPixel;
    Grid<double> values;
    std::optional<double> scale_used; // raw -> [0,255] factor, when one was applied
};

struct DensityBuildResult {
    EnergyDensityMap map;
    // Ingredients present in the record but absent from the mask; their energy
    // cannot be represented in the map.
    std::vector<int> zero_pixel_ingredients; // 1-based ingredient indices
};

// y(i,j) = e_k / |pixels labeled k|; background stays 0.
inline DensityBuildResult build_raw_density_map(const SegmentationMask& mask,
                                                const std::vector<data::IngredientRecord>& ingredients) {
    const int n = static_cast<int>(ingredients.size());
    require(mask.max_label() <= n,
            "build_raw_density_map: mask label exceeds ingredient count");
    for (const auto& ing : ingredients)
        require(ing.energy_kcal >= 0.0, "build_raw_density_map: negative ingredient energy");

    std::vector<long long> counts(static_cast<std::size_t>(n) + 1, 0);
    for (auto v : mask.labels) ++counts[v];

    std::vector<double> per_pixel(static_cast<std::size_t>(n) + 1, 0.0);
    DensityBuildResult out;
    for (int k = 1; k <= n; ++k) {
        if (counts[k] == 0) {
            out.zero_pixel_ingredients.push_back(k);
        } else {
            per_pixel[k] = ingredients[k - 1].energy_kcal / static_cast<double>(counts[k]);
        }
    }

    out.map.rep = Representation::RawKcalPerPixel;
    out.map.values = Grid<double>(mask.labels.height(), mask.labels.width(), 0.0);
    for (int i = 0; i < mask.labels.height(); ++i)
        for (int j = 0; j < mask.labels.width(); ++j)
            out.map.values(i, j) = per_pixel[mask.labels(i, j)];
    return out;
}

// Sum of all pixels of a RAW map (Kahan-compensated).
inline double integrate_energy(const EnergyDensityMap& map) {
    require(map.rep == Representation::RawKcalPerPixel,
            "integrate_energy: map must be in raw kcal-per-pixel representation");
    double sum = 0.0, c = 0.0;
    for (double v : map.values) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

// Streaming reduction for the dataset-wide raw -> [0,255] factor.
class DatasetScaleAccumulator {
public:
    void add(const EnergyDensityMap& map) {
        require(map.rep == Representation::RawKcalPerPixel,
                "DatasetScaleAccumulator: maps must be raw");
        for (double v : map.values) max_ = std::max(max_, v);
        ++n_maps_;
    }

    double finish() const {
        expect(n_maps_ > 0, "DatasetScaleAccumulator: no maps added");
        expect(max_ > 0.0, "degenerate dataset: all density maps are zero");
        return 255.0 / max_;
    }

    double max_value() const { return max_; }

private:
    double max_ = 0.0;
    long long n_maps_ = 0;
};

inline double compute_dataset_scale(const std::vector<EnergyDensityMap>& maps) {
    DatasetScaleAccumulator acc;
    for (const auto& m : maps) acc.add(m);
    return acc.finish();
}

// Representation conversions. RAW -> SCALED multiplies by density_scale and
// clamps to [0, 255]; SCALED -> SIGNED_UNIT is v / 127.5 - 1. All pairs
// compose through these two primitives and invert exactly absent clamping.
inline EnergyDensityMap scale_density_map(const EnergyDensityMap& map, Representation target,
                                          double density_scale) {
    require(density_scale > 0.0, "scale_density_map: density_scale must be positive");
    EnergyDensityMap out;
    out.rep = target;
    out.values = map.values;
    if (map.rep != Representation::RawKcalPerPixel || target != Representation::RawKcalPerPixel)
        out.scale_used = density_scale;

    auto raw_to_scaled = [&](double v) { return std::clamp(v * density_scale, 0.0, 255.0); };
    auto scaled_to_raw = [&](double v) { return v / density_scale; };
    auto scaled_to_signed = [](double v) { return v / 127.5 - 1.0; };
    auto signed_to_scaled = [](double v) { return (v + 1.0) * 127.5; };

    for (double& v : out.values) {
        double scaled;
        switch (map.rep) {
            case Representation::RawKcalPerPixel: scaled = raw_to_scaled(v); break;
            case Representation::Scaled0To255: scaled = v; break;
            case Representation::SignedUnit: scaled = signed_to_scaled(v); break;
            default: fail("scale_density_map: unsupported source representation");
        }
        switch (target) {
            case Representation::RawKcalPerPixel: v = scaled_to_raw(scaled); break;
            case Representation::Scaled0To255: v = scaled; break;
            case Representation::SignedUnit: v = scaled_to_signed(scaled); break;
            default: fail("scale_density_map: unsupported target representation");
        }
    }
    if (target == Representation::RawKcalPerPixel) out.scale_used.reset();
    return out;
}

// 8-bit quantization of a SCALED map for image-file persistence.
inline Grid<std::uint8_t> quantize_scaled(const EnergyDensityMap& map) {
    require(map.rep == Representation::Scaled0To255, "quantize_scaled: map must be in [0,255]");
    Grid<std::uint8_t> out(map.values.height(), map.values.width());
    for (int i = 0; i < map.values.height(); ++i)
        for (int j = 0; j < map.values.width(); ++j)
            out(i, j) = static_cast<std::uint8_t>(
                std::clamp(std::lround(map.values(i, j)), 0L, 255L));
    return out;
}

inline void save_density_map(const std::string& path, const EnergyDensityMap& map) {
    io::write_float_map(path, map.values, static_cast<std::uint32_t>(map.rep));
}

inline EnergyDensityMap load_density_map(const std::string& path) {
    EnergyDensityMap map;
    std::uint32_t rep = 0;
    map.values = io::read_float_map(path, &rep);
    expect(rep <= 2, path + ": bad representation tag");
    map.rep = static_cast<Representation>(rep);
    return map;
}

} // namespace edm::density
