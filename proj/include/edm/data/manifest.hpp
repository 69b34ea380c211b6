#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "edm/data/records.hpp"

namespace edm::data {

inline nlohmann::json to_json(const DishRecord& r) {
    nlohmann::json ings = nlohmann::json::array();
    for (const auto& ing : r.ingredients) {
        nlohmann::json j{{"name", ing.name}, {"energy_kcal", ing.energy_kcal}};
        if (!ing.category.empty()) j["category"] = ing.category;
        ings.push_back(j);
    }
    return nlohmann::json{{"dish_id", r.dish_id},
                          {"rgb_path", r.rgb_path},
                          {"depth_path", r.depth_path.empty() ? nlohmann::json() : nlohmann::json(r.depth_path)},
                          {"mask_path", r.mask_path.empty() ? nlohmann::json() : nlohmann::json(r.mask_path)},
                          {"total_energy_kcal", r.total_energy_kcal},
                          {"ingredients", ings}};
}

inline DishRecord dish_from_json(const nlohmann::json& j) {
    DishRecord r;
    r.dish_id = j.at("dish_id").get<std::string>();
    r.rgb_path = j.at("rgb_path").get<std::string>();
    if (j.contains("depth_path") && !j["depth_path"].is_null())
        r.depth_path = j["depth_path"].get<std::string>();
    if (j.contains("mask_path") && !j["mask_path"].is_null())
        r.mask_path = j["mask_path"].get<std::string>();
    r.total_energy_kcal = j.at("total_energy_kcal").get<double>();
    for (const auto& ij : j.at("ingredients")) {
        IngredientRecord ing;
        ing.name = ij.at("name").get<std::string>();
        ing.energy_kcal = ij.at("energy_kcal").get<double>();
        if (ij.contains("category")) ing.category = ij["category"].get<std::string>();
        r.ingredients.push_back(ing);
    }
    return r;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : m.records) recs.push_back(to_json(r));
    nlohmann::json split = nlohmann::json::object();
    for (const auto& [id, s] : m.split_assignment) split[id] = to_string(s);
    return nlohmann::json{{"records", recs},
                          {"density_scale", m.density_scale ? nlohmann::json(*m.density_scale) : nlohmann::json()},
                          {"split", split},
                          {"strata_edges", m.strata_edges},
                          {"seed", m.seed}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    for (const auto& rj : j.at("records")) m.records.push_back(dish_from_json(rj));
    if (j.contains("density_scale") && !j["density_scale"].is_null())
        m.density_scale = j["density_scale"].get<double>();
    if (j.contains("split")) {
        for (auto it = j["split"].begin(); it != j["split"].end(); ++it) {
            std::string v = it.value().get<std::string>();
            expect(v == "TRAIN" || v == "TEST", "manifest: bad split value '" + v + "'");
            expect(m.find(it.key()) != nullptr, "manifest: split references unknown dish_id " + it.key());
            m.split_assignment[it.key()] = v == "TRAIN" ? Split::Train : Split::Test;
        }
    }
    if (j.contains("strata_edges")) m.strata_edges = j["strata_edges"].get<std::vector<double>>();
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    return m;
}

// Record paths under the manifest's own directory are stored relative so a
// dataset directory can be moved or compared byte-for-byte; they are made
// absolute again on read.
inline void write_manifest(const std::string& path, const DatasetManifest& m) {
    namespace fs = std::filesystem;
    DatasetManifest copy = m;
    fs::create_directories(fs::absolute(fs::path(path)).parent_path());
    std::string dir = fs::absolute(fs::path(path)).parent_path().string() + "/";
    auto relativize = [&](std::string& p) {
        if (p.empty()) return;
        std::string abs = fs::absolute(fs::path(p)).lexically_normal().string();
        p = abs.rfind(dir, 0) == 0 ? abs.substr(dir.size()) : abs;
    };
    for (auto& r : copy.records) {
        relativize(r.rgb_path);
        relativize(r.depth_path);
        relativize(r.mask_path);
    }
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write manifest: " + path);
    out << to_json(copy).dump(2) << "\n";
    expect(out.good(), "write failed: " + path);
}

inline DatasetManifest read_manifest(const std::string& path) {
    namespace fs = std::filesystem;
    std::ifstream in(path);
    expect(in.is_open(), "cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    DatasetManifest m = manifest_from_json(j);
    std::string dir = fs::absolute(fs::path(path)).parent_path().string() + "/";
    auto absolutize = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = dir + p;
    };
    for (auto& r : m.records) {
        absolutize(r.rgb_path);
        absolutize(r.depth_path);
        absolutize(r.mask_path);
    }
    return m;
}

} // namespace edm::data
