#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edm/harness/evaluate.hpp"
#include "edm/harness/trainer.hpp"

namespace edm::harness {

using fusion::AblationConfig;
using fusion::NormalizationMode;
using fusion::Stream;

// Published reference results on the curated 909-image Nutrition5k subset:
// MAE (kcal) / MAPE (%) per feature combination. Embedded in reports for
// side-by-side display only, never used as pass/fail thresholds.
struct FeatureComboReference {
    std::vector<Stream> streams;
    bool normalized = false;
    double mae = 0.0;
    double mape = 0.0;
};

inline const std::vector<FeatureComboReference>& feature_combo_references() {
    static const std::vector<FeatureComboReference> refs = {
        {{Stream::Rgb}, false, 26.85, 40.64},
        {{Stream::Density}, false, 13.35, 16.90},
        {{Stream::Depth}, false, 76.86, 133.88},
        {{Stream::Rgb, Stream::Density}, false, 17.54, 23.20},
        {{Stream::Rgb, Stream::Density}, true, 14.65, 16.88},
        {{Stream::Density, Stream::Depth}, false, 15.83, 27.04},
        {{Stream::Density, Stream::Depth}, true, 13.29, 13.57},
        {{Stream::Rgb, Stream::Density, Stream::Depth}, true, 12.75, 16.83},
    };
    return refs;
}

// Reported Nutrition5k baseline methods, for report context.
inline const std::vector<ReferenceRow>& nutrition5k_baseline_references() {
    static const std::vector<ReferenceRow> refs = {
        {"2D direct prediction", 70.6, 26.1},
        {"depth as 4th channel", 47.6, 18.8},
        {"volume scalar", 41.3, 16.5},
    };
    return refs;
}

inline std::optional<FeatureComboReference> lookup_reference(const std::vector<Stream>& streams,
                                                             bool normalized) {
    for (const auto& ref : feature_combo_references())
        if (ref.streams == streams && ref.normalized == normalized) return ref;
    return std::nullopt;
}

// The eight default rows, in table order. Rows marked with tildes use
// normalized features; which normalization the tilde denotes is configurable
// (layer+group by default).
inline std::vector<AblationConfig> default_ablation_rows(
    NormalizationMode tilde_mode = NormalizationMode::LayerGroup) {
    require(tilde_mode != NormalizationMode::None,
            "default_ablation_rows: tilde rows need an actual normalization mode");
    const auto none = NormalizationMode::None;
    return {
        AblationConfig::make({Stream::Rgb}, none),
        AblationConfig::make({Stream::Density}, none),
        AblationConfig::make({Stream::Depth}, none),
        AblationConfig::make({Stream::Rgb, Stream::Density}, none),
        AblationConfig::make({Stream::Rgb, Stream::Density}, tilde_mode),
        AblationConfig::make({Stream::Density, Stream::Depth}, none),
        AblationConfig::make({Stream::Density, Stream::Depth}, tilde_mode),
        AblationConfig::make({Stream::Rgb, Stream::Density, Stream::Depth}, tilde_mode),
    };
}

struct AblationRow {
    AblationConfig config;
    bool ok = false;
    std::string error; // set when the row failed
    EvalReport report; // valid when ok
    std::optional<double> ref_mae;
    std::optional<double> ref_mape;
};

// Trains and evaluates every configuration with the shared seed and split.
// A failing row is marked and the remaining rows still run.
inline std::vector<AblationRow> run_ablation(const data::DatasetManifest& manifest,
                                             const std::vector<AblationConfig>& configs,
                                             const TrainingConfig& training,
                                             DishInputProvider& provider,
                                             fusion::FusionModelOptions options = {}) {
    require(!configs.empty(), "run_ablation: no configurations");
    std::vector<AblationRow> rows;
    for (const AblationConfig& config : configs) {
        AblationRow row;
        row.config = config;
        if (auto ref = lookup_reference(config.streams, config.normalization != NormalizationMode::None)) {
            row.ref_mae = ref->mae;
            row.ref_mape = ref->mape;
        }
        try {
            auto trained = train_regressor(manifest, config, training, provider, options);
            row.report = evaluate(trained.model, manifest, provider);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write ablation table: " + path);
    out << "label,mae_kcal,mape_percent,ref_mae,ref_mape\n";
    for (const auto& row : rows) {
        out << row.config.label << ",";
        if (row.ok)
            out << format_double(row.report.mae_kcal) << "," << format_double(row.report.mape_percent);
        else
            out << "failed,failed";
        out << ",";
        out << (row.ref_mae ? format_double(*row.ref_mae) : "") << ","
            << (row.ref_mape ? format_double(*row.ref_mape) : "") << "\n";
    }
    expect(out.good(), "write failed: " + path);
}

inline nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json j{{"label", row.config.label}, {"ok", row.ok}};
        if (row.ok) {
            j["mae_kcal"] = row.report.mae_kcal;
            j["mape_percent"] = row.report.mape_percent;
        } else {
            j["error"] = row.error;
        }
        if (row.ref_mae) j["ref_mae"] = *row.ref_mae;
        if (row.ref_mape) j["ref_mape"] = *row.ref_mape;
        out.push_back(j);
    }
    return out;
}

} // namespace edm::harness
