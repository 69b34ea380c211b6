#pragma once

#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "edm/core/strings.hpp"
#include "edm/data/records.hpp"

namespace edm::curation {

using data::DishRecord;

struct CurationRules {
    int max_ingredients_exclusive = 3; // keep dishes with fewer ingredients than this
    double min_total_kcal = 10.0;
    std::set<std::string> exclusion_ids;
    bool require_depth = false;

    void validate() const {
        require(max_ingredients_exclusive >= 1, "CurationRules: max_ingredients_exclusive must be >= 1");
        require(min_total_kcal >= 0.0, "CurationRules: min_total_kcal must be >= 0");
    }
};

enum class DropReason { Excluded, IngredientCount, MinEnergy, MissingDepth };

inline const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::Excluded: return "excluded";
        case DropReason::IngredientCount: return "ingredient-count";
        case DropReason::MinEnergy: return "min-energy";
        case DropReason::MissingDepth: return "missing-depth";
    }
    return "?";
}

struct CurationResult {
    std::vector<DishRecord> kept;
    std::vector<std::pair<std::string, DropReason>> dropped;
};

// Each dropped dish carries exactly one reason; checks run in the order
// excluded, ingredient-count, min-energy, missing-depth.
inline CurationResult apply_curation_rules(const std::vector<DishRecord>& records,
                                           const CurationRules& rules) {
    rules.validate();
    CurationResult result;
    for (const auto& r : records) {
        if (rules.exclusion_ids.count(r.dish_id)) {
            result.dropped.emplace_back(r.dish_id, DropReason::Excluded);
        } else if (static_cast<int>(r.ingredients.size()) >= rules.max_ingredients_exclusive) {
            result.dropped.emplace_back(r.dish_id, DropReason::IngredientCount);
        } else if (r.total_energy_kcal < rules.min_total_kcal) {
            result.dropped.emplace_back(r.dish_id, DropReason::MinEnergy);
        } else if (rules.require_depth && r.depth_path.empty()) {
            result.dropped.emplace_back(r.dish_id, DropReason::MissingDepth);
        } else {
            result.kept.push_back(r);
        }
    }
    return result;
}

// One dish_id per line; blank lines and '#' comments allowed.
inline std::set<std::string> load_exclusion_file(const std::string& path) {
    std::ifstream in(path);
    expect(in.is_open(), "cannot open exclusion file: " + path);
    std::set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string id = trim(line);
        if (!id.empty()) ids.insert(id);
    }
    return ids;
}

} // namespace edm::curation
