#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "edm/core/strings.hpp"
#include "edm/data/records.hpp"

// Metadata ingestion.
//
// Native schema ("simple"): <root>/metadata.csv with the header line
//   dish_id,total_kcal
// followed by one row per dish carrying repeated name/kcal pairs:
//   <dish_id>,<total_kcal>[,<ingredient_name>,<ingredient_kcal>]*
// Imagery is resolved by convention: rgb/<id>.ppm, depth/<id>.pgm,
// mask/<id>.pgm under the root; depth and mask are optional.
//
// Nutrition5k adapter ("nutrition5k"): rows of
//   dish_id,total_calories,total_mass,total_fat,total_carb,total_protein,
//   (ingr_id,ingr_name,grams,calories,fat,carb,protein)*
// Only the name and calories columns of each ingredient group are used; the
// mass and macronutrient columns are ignored. Imagery is resolved under
// imagery/realsense_overhead/<dish_id>/{rgb,depth_raw}.* when present.

namespace edm::data {

enum class MetadataSchema { Simple, Nutrition5k };

struct LoadRejection {
    std::string dish_id; // may be empty for unparseable rows
    std::string reason;
    int line = 0;
};

struct LoadReport {
    std::vector<DishRecord> records;
    std::vector<LoadRejection> rejected;
};

namespace detail {

inline std::string first_existing(std::initializer_list<std::string> candidates) {
    for (const auto& c : candidates)
        if (std::filesystem::exists(c)) return c;
    return {};
}

inline void resolve_simple_paths(const std::string& root, DishRecord& r) {
    r.rgb_path = root + "/rgb/" + r.dish_id + ".ppm";
    std::string depth = root + "/depth/" + r.dish_id + ".pgm";
    if (std::filesystem::exists(depth)) r.depth_path = depth;
    std::string mask = root + "/mask/" + r.dish_id + ".pgm";
    if (std::filesystem::exists(mask)) r.mask_path = mask;
}

inline void resolve_nutrition5k_paths(const std::string& root, DishRecord& r) {
    std::string dir = root + "/imagery/realsense_overhead/" + r.dish_id;
    r.rgb_path = first_existing({dir + "/rgb.ppm", dir + "/rgb.png"});
    if (r.rgb_path.empty()) r.rgb_path = dir + "/rgb.ppm";
    r.depth_path = first_existing({dir + "/depth_raw.pgm", dir + "/depth_raw.png"});
    r.mask_path = first_existing({root + "/mask/" + r.dish_id + ".pgm"});
}

} // namespace detail

inline LoadReport load_metadata(const std::string& root, MetadataSchema schema) {
    namespace fs = std::filesystem;
    expect(fs::exists(root), "dataset root does not exist: " + root);
    std::string csv_path = root + "/metadata.csv";
    if (schema == MetadataSchema::Nutrition5k && !fs::exists(csv_path)) {
        std::string alt = root + "/metadata/dish_metadata_cafe1.csv";
        if (fs::exists(alt)) csv_path = alt;
    }
    expect(fs::exists(csv_path), "metadata file not found: " + csv_path);

    std::ifstream in(csv_path);
    expect(in.is_open(), "cannot open metadata file: " + csv_path);

    LoadReport report;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    bool header_done = schema == MetadataSchema::Nutrition5k; // no header in n5k files
    while (std::getline(in, line)) {
        ++line_no;
        if (!header_done) {
            auto fields = split_csv_line(line);
            expect(fields.size() >= 2 && fields[0] == "dish_id" && fields[1] == "total_kcal",
                   csv_path + ": missing 'dish_id,total_kcal' header line");
            header_done = true;
            continue;
        }
        std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;

        auto fields = split_csv_line(line);
        auto reject = [&](const std::string& id, const std::string& reason) {
            report.rejected.push_back({id, reason, line_no});
        };

        DishRecord r;
        try {
            if (schema == MetadataSchema::Simple) {
                expect(fields.size() >= 2 && (fields.size() - 2) % 2 == 0, "malformed row");
                r.dish_id = fields[0];
                r.total_energy_kcal = parse_double(fields[1]);
                for (std::size_t i = 2; i + 1 < fields.size(); i += 2) {
                    IngredientRecord ing;
                    ing.name = fields[i];
                    ing.energy_kcal = parse_double(fields[i + 1]);
                    expect(!ing.name.empty(), "empty ingredient name");
                    r.ingredients.push_back(ing);
                }
            } else {
                expect(fields.size() >= 6 && (fields.size() - 6) % 7 == 0, "malformed row");
                r.dish_id = fields[0];
                r.total_energy_kcal = parse_double(fields[1]);
                for (std::size_t i = 6; i + 6 < fields.size(); i += 7) {
                    IngredientRecord ing;
                    ing.name = fields[i + 1];
                    ing.energy_kcal = parse_double(fields[i + 3]);
                    expect(!ing.name.empty(), "empty ingredient name");
                    r.ingredients.push_back(ing);
                }
            }
        } catch (const std::exception& e) {
            reject(fields.empty() ? "" : fields[0], std::string("parse-error: ") + e.what());
            continue;
        }

        if (r.dish_id.empty()) {
            reject("", "parse-error: empty dish_id");
            continue;
        }
        if (seen_ids.count(r.dish_id)) {
            reject(r.dish_id, "duplicate dish_id");
            continue;
        }
        bool negative = r.total_energy_kcal < 0.0;
        for (const auto& ing : r.ingredients)
            if (ing.energy_kcal < 0.0) negative = true;
        if (negative) {
            reject(r.dish_id, "negative-energy");
            continue;
        }
        if (!total_consistent(r)) {
            reject(r.dish_id, "total mismatch");
            continue;
        }

        if (schema == MetadataSchema::Simple)
            detail::resolve_simple_paths(root, r);
        else
            detail::resolve_nutrition5k_paths(root, r);
        seen_ids.insert(r.dish_id);
        report.records.push_back(std::move(r));
    }
    return report;
}

// Writes the simple schema. Numbers use shortest round-trip formatting, so a
// load of the written file reproduces the records exactly.
inline void save_metadata_csv(const std::string& path, const std::vector<DishRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write metadata file: " + path);
    out << "dish_id,total_kcal\n";
    for (const auto& r : records) {
        out << r.dish_id << "," << format_double(r.total_energy_kcal);
        for (const auto& ing : r.ingredients)
            out << "," << ing.name << "," << format_double(ing.energy_kcal);
        out << "\n";
    }
    expect(out.good(), "write failed: " + path);
}

} // namespace edm::data
