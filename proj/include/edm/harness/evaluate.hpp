#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/core/strings.hpp"
#include "edm/data/records.hpp"
#include "edm/fusion/regressor.hpp"
#include "edm/harness/inputs.hpp"

namespace edm::harness {

struct DishEval {
    std::string dish_id;
    double energy_kcal = 0.0;     // ground truth e
    double estimate_kcal = 0.0;   // prediction e-hat
};

struct ReferenceRow {
    std::string label;
    double mae = 0.0;
    double mape = 0.0;
};

struct EvalReport {
    std::string label;
    std::vector<DishEval> per_dish;
    double mae_kcal = 0.0;
    double mape_percent = 0.0;
    std::vector<ReferenceRow> reference_rows;
};

// MAE = (1/N) sum |e-hat - e|; MAPE = (1/N) sum |e-hat - e| / e * 100.
inline EvalReport finalize_report(std::string label, std::vector<DishEval> per_dish,
                                  std::vector<ReferenceRow> reference_rows = {}) {
    require(!per_dish.empty(), "finalize_report: no evaluations");
    EvalReport report;
    report.label = std::move(label);
    report.per_dish = std::move(per_dish);
    report.reference_rows = std::move(reference_rows);
    double mae = 0.0, mape = 0.0;
    for (const auto& d : report.per_dish) {
        expect(d.energy_kcal != 0.0, "MAPE undefined: dish " + d.dish_id + " has zero energy");
        double err = std::abs(d.estimate_kcal - d.energy_kcal);
        mae += err;
        mape += err / d.energy_kcal * 100.0;
    }
    const double n = static_cast<double>(report.per_dish.size());
    report.mae_kcal = mae / n;
    report.mape_percent = mape / n;
    return report;
}

// Evaluates the TEST split end-to-end: per-dish inputs come from the provider
// (generated density maps, never ground truth).
inline EvalReport evaluate(fusion::FusionModel& model, const data::DatasetManifest& manifest,
                           DishInputProvider& provider,
                           std::vector<ReferenceRow> reference_rows = {}) {
    auto test_records = manifest.in_split(data::Split::Test);
    expect(!test_records.empty(), "evaluate: TEST split is empty");
    std::vector<DishEval> rows;
    for (const data::DishRecord* r : test_records) {
        auto in = provider.inputs(*r, model.config().streams);
        DishEval d;
        d.dish_id = r->dish_id;
        d.energy_kcal = r->total_energy_kcal;
        d.estimate_kcal = model.predict(in);
        rows.push_back(std::move(d));
    }
    return finalize_report(model.config().label, std::move(rows), std::move(reference_rows));
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json dishes = nlohmann::json::array();
    for (const auto& d : r.per_dish)
        dishes.push_back({{"dish_id", d.dish_id},
                          {"energy_kcal", d.energy_kcal},
                          {"estimate_kcal", d.estimate_kcal}});
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& ref : r.reference_rows)
        refs.push_back({{"label", ref.label}, {"mae_kcal", ref.mae}, {"mape_percent", ref.mape}});
    return {{"label", r.label},
            {"mae_kcal", r.mae_kcal},
            {"mape_percent", r.mape_percent},
            {"per_dish", dishes},
            {"reference_rows", refs}};
}

inline void write_report_json(const std::string& path, const EvalReport& r) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write report: " + path);
    out << report_to_json(r).dump(2) << "\n";
    expect(out.good(), "write failed: " + path);
}

} // namespace edm::harness
