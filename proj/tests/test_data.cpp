#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "edm/data/manifest.hpp"
#include "edm/data/metadata.hpp"
#include "edm/data/records.hpp"

#include "test_util.hpp"

using namespace edm;
using namespace edm::data;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("load_metadata parses valid rows", "[data]") {
    TempDir tmp("meta");
    write_file(tmp.file("metadata.csv"),
               "dish_id,total_kcal\n"
               "dish_a,150,rice,100,beans,50\n"
               "dish_b,80,egg,80\n");
    auto report = load_metadata(tmp.str(), MetadataSchema::Simple);
    REQUIRE(report.records.size() == 2);
    REQUIRE(report.rejected.empty());
    REQUIRE(report.records[0].dish_id == "dish_a");
    REQUIRE(report.records[0].total_energy_kcal == 150.0);
    REQUIRE(report.records[0].ingredients.size() == 2);
    REQUIRE(report.records[0].ingredients[1].name == "beans");
    REQUIRE(report.records[0].rgb_path == tmp.str() + "/rgb/dish_a.ppm");
}

TEST_CASE("load_metadata rejects total mismatch and negative energy rows", "[data]") {
    TempDir tmp("metarej");
    write_file(tmp.file("metadata.csv"),
               "dish_id,total_kcal\n"
               "ok,150,rice,100,beans,50\n"
               "bad_total,150,rice,60,beans,30\n"
               "bad_neg,10,rice,-5,beans,15\n");
    auto report = load_metadata(tmp.str(), MetadataSchema::Simple);
    REQUIRE(report.records.size() == 1);
    REQUIRE(report.records[0].dish_id == "ok");
    REQUIRE(report.rejected.size() == 2);
    REQUIRE(report.rejected[0].dish_id == "bad_total");
    REQUIRE(report.rejected[0].reason == "total mismatch");
    REQUIRE(report.rejected[1].dish_id == "bad_neg");
    REQUIRE(report.rejected[1].reason == "negative-energy");
}

TEST_CASE("load_metadata fails hard on a missing file", "[data]") {
    TempDir tmp("metamissing");
    REQUIRE_THROWS(load_metadata(tmp.str(), MetadataSchema::Simple));
}

TEST_CASE("metadata survives a save/load round trip", "[data]") {
    TempDir tmp("metart");
    write_file(tmp.file("metadata.csv"),
               "dish_id,total_kcal\n"
               "a,150.125,rice,100.0625,beans,50.0625\n"
               "b,33.3,soup,33.3\n");
    auto first = load_metadata(tmp.str(), MetadataSchema::Simple);
    REQUIRE(first.records.size() == 2);

    TempDir tmp2("metart2");
    save_metadata_csv(tmp2.file("metadata.csv"), first.records);
    auto second = load_metadata(tmp2.str(), MetadataSchema::Simple);
    REQUIRE(second.records.size() == first.records.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        REQUIRE(second.records[i].dish_id == first.records[i].dish_id);
        REQUIRE(second.records[i].total_energy_kcal == first.records[i].total_energy_kcal);
        REQUIRE(second.records[i].ingredients.size() == first.records[i].ingredients.size());
        for (std::size_t k = 0; k < first.records[i].ingredients.size(); ++k) {
            REQUIRE(second.records[i].ingredients[k].name == first.records[i].ingredients[k].name);
            REQUIRE(second.records[i].ingredients[k].energy_kcal ==
                    first.records[i].ingredients[k].energy_kcal);
        }
    }
}

TEST_CASE("nutrition5k schema adapter extracts name and calorie columns", "[data]") {
    TempDir tmp("metan5k");
    write_file(tmp.file("metadata.csv"),
               "dish_1,150,210,10,12,8,ingr_1,rice,120,100,1,20,2,ingr_2,beans,90,50,1,8,3\n");
    auto report = load_metadata(tmp.str(), MetadataSchema::Nutrition5k);
    REQUIRE(report.records.size() == 1);
    const auto& r = report.records[0];
    REQUIRE(r.dish_id == "dish_1");
    REQUIRE(r.total_energy_kcal == 150.0);
    REQUIRE(r.ingredients.size() == 2);
    REQUIRE(r.ingredients[0].name == "rice");
    REQUIRE(r.ingredients[0].energy_kcal == 100.0);
    REQUIRE(r.ingredients[1].name == "beans");
    REQUIRE(r.ingredients[1].energy_kcal == 50.0);
}

TEST_CASE("validate_record reports violations as data", "[data]") {
    TempDir tmp("validate");
    write_file(tmp.file("rgb.ppm"), "x");

    DishRecord ok;
    ok.dish_id = "ok";
    ok.rgb_path = tmp.file("rgb.ppm");
    ok.total_energy_kcal = 150.0;
    ok.ingredients = {{"rice", 100.0, ""}, {"beans", 50.0, ""}};
    REQUIRE(validate_record(ok).empty());

    DishRecord missing = ok;
    missing.rgb_path = tmp.file("absent.ppm");
    auto v1 = validate_record(missing);
    REQUIRE(v1.size() == 1);
    REQUIRE(v1[0] == Violation::MissingFile);

    DishRecord negative = ok;
    negative.ingredients[0].energy_kcal = -5.0;
    negative.total_energy_kcal = 45.0;
    auto v2 = validate_record(negative);
    REQUIRE(std::find(v2.begin(), v2.end(), Violation::NegativeEnergy) != v2.end());

    DishRecord mismatch = ok;
    mismatch.total_energy_kcal = 90.0;
    auto v3 = validate_record(mismatch);
    REQUIRE(std::find(v3.begin(), v3.end(), Violation::TotalMismatch) != v3.end());
}

TEST_CASE("total consistency uses relative tolerance", "[data]") {
    DishRecord r;
    r.total_energy_kcal = 150.0;
    r.ingredients = {{"a", 150.0 * (1.0 + 5e-7), ""}};
    REQUIRE(total_consistent(r));
    r.ingredients[0].energy_kcal = 150.0 * (1.0 + 5e-6);
    REQUIRE_FALSE(total_consistent(r));
}

TEST_CASE("manifest JSON round trips", "[data]") {
    TempDir tmp("manifest");
    DatasetManifest m;
    DishRecord r;
    r.dish_id = "d1";
    r.rgb_path = "/data/rgb/d1.ppm";
    r.depth_path = "/data/depth/d1.pgm";
    r.total_energy_kcal = 120.5;
    r.ingredients = {{"rice", 120.5, "grain"}};
    m.records.push_back(r);
    m.density_scale = 37.25;
    m.split_assignment["d1"] = Split::Train;
    m.strata_edges = {50.0, 100.0};
    m.seed = 1234;

    write_manifest(tmp.file("m.json"), m);
    auto back = read_manifest(tmp.file("m.json"));
    REQUIRE(back.records.size() == 1);
    REQUIRE(back.records[0].dish_id == "d1");
    REQUIRE(back.records[0].depth_path == r.depth_path);
    REQUIRE(back.records[0].ingredients[0].category == "grain");
    REQUIRE(back.density_scale);
    REQUIRE(*back.density_scale == 37.25);
    REQUIRE(back.split_assignment.at("d1") == Split::Train);
    REQUIRE(back.strata_edges == m.strata_edges);
    REQUIRE(back.seed == 1234);
}

TEST_CASE("manifest rejects split entries for unknown dishes", "[data]") {
    nlohmann::json j{{"records", nlohmann::json::array()},
                     {"density_scale", nullptr},
                     {"split", {{"ghost", "TRAIN"}}},
                     {"strata_edges", nlohmann::json::array()},
                     {"seed", 0}};
    REQUIRE_THROWS(manifest_from_json(j));
}
