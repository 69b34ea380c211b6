#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edm/core/error.hpp"

namespace edm::data {

struct IngredientRecord {
    std::string name;
    double energy_kcal = 0.0;
    std::string category; // optional, empty when unknown
};

struct DishRecord {
    std::string dish_id;
    std::string rgb_path;
    std::string depth_path; // optional, empty when absent
    std::string mask_path;  // optional, empty when absent
    double total_energy_kcal = 0.0;
    std::vector<IngredientRecord> ingredients;
};

enum class Split { Train, Test };

inline const char* to_string(Split s) { return s == Split::Train ? "TRAIN" : "TEST"; }

struct DatasetManifest {
    std::vector<DishRecord> records;
    std::optional<double> density_scale; // dataset-wide raw -> [0,255] factor
    std::map<std::string, Split> split_assignment;
    std::vector<double> strata_edges;
    std::uint64_t seed = 0;

    const DishRecord* find(const std::string& dish_id) const {
        for (const auto& r : records)
            if (r.dish_id == dish_id) return &r;
        return nullptr;
    }

    std::vector<const DishRecord*> in_split(Split s) const {
        std::vector<const DishRecord*> out;
        for (const auto& r : records) {
            auto it = split_assignment.find(r.dish_id);
            if (it != split_assignment.end() && it->second == s) out.push_back(&r);
        }
        return out;
    }
};

// Relative tolerance for total-vs-ingredient-sum consistency.
constexpr double kTotalTolerance = 1e-6;

inline double ingredient_sum(const DishRecord& r) {
    double s = 0.0;
    for (const auto& ing : r.ingredients) s += ing.energy_kcal;
    return s;
}

inline bool total_consistent(const DishRecord& r) {
    double s = ingredient_sum(r);
    double scale = std::max(std::abs(r.total_energy_kcal), std::abs(s));
    if (scale == 0.0) return true;
    return std::abs(r.total_energy_kcal - s) <= kTotalTolerance * scale;
}

enum class Violation { TotalMismatch, MissingFile, NegativeEnergy };

inline const char* to_string(Violation v) {
    switch (v) {
        case Violation::TotalMismatch: return "total-mismatch";
        case Violation::MissingFile: return "missing-file";
        case Violation::NegativeEnergy: return "negative-energy";
    }
    return "?";
}

// Pure check; violations are data, not errors. File checks only apply to
// paths that are set (depth/mask are optional).
inline std::vector<Violation> validate_record(const DishRecord& r) {
    std::vector<Violation> out;
    if (!total_consistent(r)) out.push_back(Violation::TotalMismatch);

    bool missing = r.rgb_path.empty() || !std::filesystem::exists(r.rgb_path);
    if (!r.depth_path.empty() && !std::filesystem::exists(r.depth_path)) missing = true;
    if (!r.mask_path.empty() && !std::filesystem::exists(r.mask_path)) missing = true;
    if (missing) out.push_back(Violation::MissingFile);

    bool negative = r.total_energy_kcal < 0.0;
    for (const auto& ing : r.ingredients)
        if (ing.energy_kcal < 0.0) negative = true;
    if (negative) out.push_back(Violation::NegativeEnergy);
    return out;
}

} // namespace edm::data
