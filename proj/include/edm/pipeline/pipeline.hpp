#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/curation/curation.hpp"
#include "edm/curation/split.hpp"
#include "edm/curation/stats.hpp"
#include "edm/data/manifest.hpp"
#include "edm/data/metadata.hpp"
#include "edm/density/energy_density.hpp"
#include "edm/gan/pix2pix.hpp"
#include "edm/harness/ablation.hpp"
#include "edm/harness/evaluate.hpp"
#include "edm/harness/trainer.hpp"
#include "edm/synth/synth.hpp"

// One function per CLI subcommand. Every artifact-producing run writes a
// provenance record (command, effective config, config hash, seed, format
// versions) next to its outputs; records carry no timestamps so reruns with
// the same inputs are byte-identical.

namespace edm::pipeline {

using nn::Tensor;

constexpr const char* kToolVersion = "0.1.0";

inline void write_provenance(const std::string& dir, const std::string& command,
                             const nlohmann::json& effective_config, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    nlohmann::json j = {{"command", command},
                        {"config", effective_config},
                        {"config_hash", hex64(fnv1a64(effective_config.dump()))},
                        {"seed", seed},
                        {"versions",
                         {{"tool", kToolVersion}, {"manifest_format", 1}, {"checkpoint_format", 1},
                          {"float_map_format", 1}}}};
    std::ofstream out(dir + "/provenance.json", std::ios::trunc);
    expect(out.is_open(), "cannot write provenance in " + dir);
    out << j.dump(2) << "\n";
    expect(out.good(), "write failed: provenance in " + dir);
}

// ---------------------------------------------------------------- synth ----

inline data::DatasetManifest run_synth(const synth::SynthConfig& config, const std::string& out_dir) {
    auto manifest = synth::generate_synthetic_dataset(config, out_dir);
    nlohmann::json cfg = {{"n_dishes", config.n_dishes},
                          {"image_side", config.image_side},
                          {"max_foods_per_dish", config.max_foods_per_dish},
                          {"seed", config.seed},
                          {"plate_plane_units", config.plate_plane_units},
                          {"speckle_fraction", config.speckle_fraction},
                          {"min_food_pixels", config.min_food_pixels}};
    write_provenance(out_dir, "synth", cfg, config.seed);
    return manifest;
}

// --------------------------------------------------------------- curate ----

struct CurateOptions {
    std::string root;
    data::MetadataSchema schema = data::MetadataSchema::Simple;
    curation::CurationRules rules;
    std::string exclusion_file; // optional
    double train_fraction = 0.8;
    int n_strata = 5;
    std::uint64_t seed = 0;
    std::string out_manifest; // file path
};

// Load -> validate -> curate -> stratified split -> manifest. Dishes failing
// validation or curation are reported, never silently fixed.
inline data::DatasetManifest run_curate(const CurateOptions& opts) {
    curation::CurationRules rules = opts.rules;
    if (!opts.exclusion_file.empty()) {
        auto extra = curation::load_exclusion_file(opts.exclusion_file);
        rules.exclusion_ids.insert(extra.begin(), extra.end());
    }
    rules.validate();

    auto load = data::load_metadata(opts.root, opts.schema);

    nlohmann::json report;
    report["load_rejected"] = nlohmann::json::array();
    for (const auto& rej : load.rejected)
        report["load_rejected"].push_back(
            {{"dish_id", rej.dish_id}, {"reason", rej.reason}, {"line", rej.line}});

    std::vector<data::DishRecord> valid;
    report["validation_rejected"] = nlohmann::json::array();
    for (const auto& r : load.records) {
        auto violations = data::validate_record(r);
        if (violations.empty()) {
            valid.push_back(r);
        } else {
            nlohmann::json v = nlohmann::json::array();
            for (auto code : violations) v.push_back(data::to_string(code));
            report["validation_rejected"].push_back({{"dish_id", r.dish_id}, {"violations", v}});
        }
    }

    auto curated = curation::apply_curation_rules(valid, rules);
    report["curation_dropped"] = nlohmann::json::array();
    for (const auto& [id, reason] : curated.dropped)
        report["curation_dropped"].push_back({{"dish_id", id}, {"reason", curation::to_string(reason)}});

    expect(!curated.kept.empty(), "curate: no records survived curation");
    auto split = curation::stratified_split(curated.kept, opts.train_fraction, opts.n_strata, opts.seed);
    report["whole_train_bins"] = split.whole_train_bins;

    data::DatasetManifest manifest;
    manifest.records = curated.kept;
    manifest.split_assignment = split.assignment;
    manifest.strata_edges = split.strata_edges;
    manifest.seed = opts.seed;

    data::write_manifest(opts.out_manifest, manifest);
    std::string dir = std::filesystem::absolute(opts.out_manifest).parent_path().string();
    {
        std::ofstream out(dir + "/curation_report.json", std::ios::trunc);
        expect(out.is_open(), "cannot write curation report");
        out << report.dump(2) << "\n";
    }
    nlohmann::json cfg = {{"root", opts.root},
                          {"schema", opts.schema == data::MetadataSchema::Simple ? "simple" : "nutrition5k"},
                          {"max_ingredients_exclusive", rules.max_ingredients_exclusive},
                          {"min_total_kcal", rules.min_total_kcal},
                          {"require_depth", rules.require_depth},
                          {"n_exclusions", rules.exclusion_ids.size()},
                          {"train_fraction", opts.train_fraction},
                          {"n_strata", opts.n_strata},
                          {"seed", opts.seed}};
    write_provenance(dir, "curate", cfg, opts.seed);
    return manifest;
}

// -------------------------------------------------------------- build-gt ---

enum class ScaleScope { Train, All };

struct BuildGtOptions {
    std::string manifest_path;
    std::string out_dir;
    ScaleScope scale_scope = ScaleScope::Train; // train statistics only, no test leakage
};

struct BuildGtResult {
    data::DatasetManifest manifest; // with density_scale set
    std::vector<std::string> warnings;
};

inline BuildGtResult build_gt_density(const BuildGtOptions& opts) {
    namespace fs = std::filesystem;
    BuildGtResult result;
    result.manifest = data::read_manifest(opts.manifest_path);
    fs::create_directories(opts.out_dir);

    // pass 1: build raw maps in memory, accumulate the dataset scale
    std::vector<density::EnergyDensityMap> raw_maps(result.manifest.records.size());
    density::DatasetScaleAccumulator acc;
    for (std::size_t i = 0; i < result.manifest.records.size(); ++i) {
        const auto& r = result.manifest.records[i];
        expect(!r.mask_path.empty(), "build-gt: dish " + r.dish_id + " has no segmentation mask");
        density::SegmentationMask mask;
        auto labels8 = io::read_pgm8(r.mask_path);
        mask.labels = Grid<std::uint16_t>(labels8.height(), labels8.width());
        for (std::size_t p = 0; p < labels8.size(); ++p) mask.labels.data()[p] = labels8.data()[p];

        auto built = density::build_raw_density_map(mask, r.ingredients);
        for (int k : built.zero_pixel_ingredients)
            result.warnings.push_back("zero-pixel ingredient " + std::to_string(k) + " (" +
                                      r.ingredients[static_cast<std::size_t>(k - 1)].name +
                                      ") in dish " + r.dish_id);
        raw_maps[i] = std::move(built.map);

        bool in_scope = opts.scale_scope == ScaleScope::All;
        if (!in_scope) {
            auto it = result.manifest.split_assignment.find(r.dish_id);
            expect(it != result.manifest.split_assignment.end(),
                   "build-gt: dish " + r.dish_id +
                       " has no split assignment; run curate first or use --scale-scope all");
            in_scope = it->second == data::Split::Train;
        }
        if (in_scope) acc.add(raw_maps[i]);
    }
    const double scale = acc.finish();
    result.manifest.density_scale = scale;

    // pass 2: persist raw float maps and 8-bit scaled images
    for (std::size_t i = 0; i < result.manifest.records.size(); ++i) {
        const auto& r = result.manifest.records[i];
        density::save_density_map(opts.out_dir + "/" + r.dish_id + ".density.raw", raw_maps[i]);
        auto scaled = density::scale_density_map(raw_maps[i], density::Representation::Scaled0To255,
                                                 scale);
        io::write_pgm8(opts.out_dir + "/" + r.dish_id + ".density.pgm",
                       density::quantize_scaled(scaled));
    }

    data::write_manifest(opts.out_dir + "/manifest.json", result.manifest);
    {
        nlohmann::json report = {{"density_scale", scale}, {"warnings", result.warnings}};
        std::ofstream out(opts.out_dir + "/build_gt_report.json", std::ios::trunc);
        expect(out.is_open(), "cannot write build-gt report");
        out << report.dump(2) << "\n";
    }
    nlohmann::json cfg = {{"manifest", opts.manifest_path},
                          {"scale_scope", opts.scale_scope == ScaleScope::Train ? "train" : "all"}};
    write_provenance(opts.out_dir, "build-gt", cfg, result.manifest.seed);
    return result;
}

// -------------------------------------------------------------- train-gan --

struct TrainGanOptions {
    std::string manifest_path; // manifest written by build-gt (has density_scale)
    std::string gt_dir;        // defaults to the manifest's directory
    std::string out_checkpoint;
    gan::GanConfig config;
};

inline gan::GanTrainResult run_train_gan(const TrainGanOptions& opts) {
    namespace fs = std::filesystem;
    auto manifest = data::read_manifest(opts.manifest_path);
    expect(manifest.density_scale.has_value(),
           "train-gan: manifest has no density_scale; run build-gt first");
    std::string gt_dir = opts.gt_dir.empty()
                             ? fs::absolute(opts.manifest_path).parent_path().string()
                             : opts.gt_dir;

    std::vector<gan::GanPair> pairs;
    for (const data::DishRecord* r : manifest.in_split(data::Split::Train)) {
        gan::GanPair pair;
        Tensor rgb = harness::rgb_to_signed_tensor(io::read_ppm8(r->rgb_path));
        pair.rgb = fusion::resize_tensor_image(rgb, opts.config.image_side);

        auto raw = density::load_density_map(gt_dir + "/" + r->dish_id + ".density.raw");
        expect(raw.rep == density::Representation::RawKcalPerPixel,
               "train-gan: " + r->dish_id + ".density.raw is not a raw map");
        auto su = density::scale_density_map(raw, density::Representation::SignedUnit,
                                             *manifest.density_scale);
        pair.target = fusion::resize_tensor_image(harness::grid_to_tensor(su.values),
                                                  opts.config.image_side);
        pairs.push_back(std::move(pair));
    }

    auto result = gan::train_density_generator(pairs, opts.config);
    gan::save_generator(opts.out_checkpoint, result.model);
    std::string dir = fs::absolute(opts.out_checkpoint).parent_path().string();
    gan::write_gan_history_csv(dir + "/gan_history.csv", result.history);
    write_provenance(dir, "train-gan", opts.config.to_json(), opts.config.seed);
    return result;
}

// -------------------------------------------------------------- infer-gan --

struct InferGanOptions {
    std::string checkpoint;
    std::string manifest_path;
    std::string out_dir;
};

inline void run_infer_gan(const InferGanOptions& opts) {
    namespace fs = std::filesystem;
    auto manifest = data::read_manifest(opts.manifest_path);
    auto model = gan::load_generator(opts.checkpoint);
    fs::create_directories(opts.out_dir);
    for (const auto& r : manifest.records) {
        Tensor rgb = harness::rgb_to_signed_tensor(io::read_ppm8(r.rgb_path));
        Tensor map = gan::generate_density_map(model, rgb, /*allow_resize=*/true);
        Grid<double> g(map.dim(1), map.dim(2));
        std::copy(map.begin(), map.end(), g.begin());
        io::write_float_map(opts.out_dir + "/" + r.dish_id + ".gen.raw", g,
                            static_cast<std::uint32_t>(density::Representation::SignedUnit));
    }
    nlohmann::json cfg = {{"checkpoint", opts.checkpoint},
                          {"manifest", opts.manifest_path},
                          {"generator_config", model.config.to_json()}};
    write_provenance(opts.out_dir, "infer-gan", cfg, model.config.seed);
}

// ------------------------------------------------------------------ train --

struct TrainRegressorOptions {
    std::string manifest_path;
    fusion::AblationConfig ablation;
    harness::TrainingConfig training;
    fusion::FusionModelOptions model;
    harness::DepthOptions depth;
    std::string generated_dir;    // pre-computed generator outputs, or
    std::string gan_checkpoint;   // generate on the fly
    std::string out_model;
};

inline harness::FileInputProvider make_provider(const std::string& generated_dir,
                                                const std::string& gan_checkpoint,
                                                harness::DepthOptions depth) {
    harness::FileInputProvider provider;
    provider.set_depth_options(depth);
    if (!generated_dir.empty())
        provider.set_generated_dir(generated_dir);
    else if (!gan_checkpoint.empty())
        provider.set_generator(
            std::make_shared<gan::GeneratorModel>(gan::load_generator(gan_checkpoint)));
    return provider;
}

inline nlohmann::json train_options_json(const TrainRegressorOptions& opts) {
    return {{"manifest", opts.manifest_path},
            {"ablation", {{"label", opts.ablation.label},
                          {"normalization", fusion::to_string(opts.ablation.normalization)}}},
            {"training", opts.training.to_json()},
            {"backbone", opts.model.backbone == fusion::BackboneKind::Vgg16 ? "vgg16" : "reduced"},
            {"head_width", opts.model.effective_head_width()},
            {"dilate", opts.depth.dilation_kernel},
            {"close", opts.depth.closing_kernel},
            {"generated_dir", opts.generated_dir},
            {"gan_checkpoint", opts.gan_checkpoint}};
}

inline harness::RegressorTrainResult run_train_regressor(const TrainRegressorOptions& opts) {
    namespace fs = std::filesystem;
    auto manifest = data::read_manifest(opts.manifest_path);
    auto provider = make_provider(opts.generated_dir, opts.gan_checkpoint, opts.depth);
    auto result = harness::train_regressor(manifest, opts.ablation, opts.training, provider,
                                           opts.model);
    nlohmann::json provenance = {{"training_config_hash", opts.training.hash()},
                                 {"seed", opts.training.seed},
                                 {"epochs_completed", static_cast<int>(result.history.size())},
                                 {"final_train_loss",
                                  result.history.empty() ? nlohmann::json()
                                                         : nlohmann::json(result.history.back().train_loss)}};
    result.model.save(opts.out_model, provenance);
    std::string dir = fs::absolute(opts.out_model).parent_path().string();
    harness::write_history_csv(dir + "/train_history.csv", result.history);
    write_provenance(dir, "train", train_options_json(opts), opts.training.seed);
    return result;
}

// ------------------------------------------------------------------- eval --

struct EvalOptions {
    std::string model_path;
    std::string manifest_path;
    std::string generated_dir;
    std::string gan_checkpoint;
    harness::DepthOptions depth;
    std::string out_dir;
};

inline harness::EvalReport run_eval(const EvalOptions& opts) {
    namespace fs = std::filesystem;
    auto manifest = data::read_manifest(opts.manifest_path);
    auto model = fusion::FusionModel::load(opts.model_path);
    auto provider = make_provider(opts.generated_dir, opts.gan_checkpoint, opts.depth);

    std::vector<harness::ReferenceRow> refs;
    if (auto ref = harness::lookup_reference(model.config().streams,
                                             model.config().normalization !=
                                                 fusion::NormalizationMode::None))
        refs.push_back({model.config().label, ref->mae, ref->mape});
    for (const auto& b : harness::nutrition5k_baseline_references()) refs.push_back(b);

    auto report = harness::evaluate(model, manifest, provider, refs);
    fs::create_directories(opts.out_dir);
    harness::write_report_json(opts.out_dir + "/eval_report.json", report);
    {
        std::ofstream out(opts.out_dir + "/eval_per_dish.csv", std::ios::trunc);
        expect(out.is_open(), "cannot write per-dish csv");
        out << "dish_id,energy_kcal,estimate_kcal\n";
        for (const auto& d : report.per_dish)
            out << d.dish_id << "," << format_double(d.energy_kcal) << ","
                << format_double(d.estimate_kcal) << "\n";
    }
    nlohmann::json cfg = {{"model", opts.model_path},
                          {"manifest", opts.manifest_path},
                          {"generated_dir", opts.generated_dir},
                          {"gan_checkpoint", opts.gan_checkpoint}};
    write_provenance(opts.out_dir, "eval", cfg, manifest.seed);
    return report;
}

// ----------------------------------------------------------------- ablate --

struct AblateOptions {
    std::string manifest_path;
    std::vector<fusion::AblationConfig> configs; // empty = the eight default rows
    fusion::NormalizationMode tilde_mode = fusion::NormalizationMode::LayerGroup;
    harness::TrainingConfig training;
    fusion::FusionModelOptions model;
    harness::DepthOptions depth;
    std::string generated_dir;
    std::string gan_checkpoint;
    std::string out_dir;
};

inline std::vector<harness::AblationRow> run_ablate(const AblateOptions& opts) {
    namespace fs = std::filesystem;
    auto manifest = data::read_manifest(opts.manifest_path);
    auto provider = make_provider(opts.generated_dir, opts.gan_checkpoint, opts.depth);
    auto configs = opts.configs.empty() ? harness::default_ablation_rows(opts.tilde_mode)
                                        : opts.configs;
    auto rows = harness::run_ablation(manifest, configs, opts.training, provider, opts.model);

    fs::create_directories(opts.out_dir);
    harness::write_ablation_csv(opts.out_dir + "/ablation.csv", rows);
    {
        std::ofstream out(opts.out_dir + "/ablation.json", std::ios::trunc);
        expect(out.is_open(), "cannot write ablation json");
        out << harness::ablation_to_json(rows).dump(2) << "\n";
    }
    nlohmann::json cfg = {{"manifest", opts.manifest_path},
                          {"rows", configs.size()},
                          {"tilde_mode", fusion::to_string(opts.tilde_mode)},
                          {"training", opts.training.to_json()},
                          {"backbone",
                           opts.model.backbone == fusion::BackboneKind::Vgg16 ? "vgg16" : "reduced"}};
    write_provenance(opts.out_dir, "ablate", cfg, opts.training.seed);
    return rows;
}

// ------------------------------------------------------------------ stats --

struct StatsOptions {
    std::string manifest_path;
    int n_bins = 20;
    std::string out_dir;
};

inline curation::DistributionStats run_stats(const StatsOptions& opts) {
    auto manifest = data::read_manifest(opts.manifest_path);
    auto stats = curation::distribution_stats(manifest.records, opts.n_bins);
    std::filesystem::create_directories(opts.out_dir);
    curation::write_stats_csv(opts.out_dir + "/energy_histogram.csv", stats);
    curation::write_stats_json(opts.out_dir + "/energy_stats.json", stats);
    nlohmann::json cfg = {{"manifest", opts.manifest_path}, {"n_bins", opts.n_bins}};
    write_provenance(opts.out_dir, "stats", cfg, manifest.seed);
    return stats;
}

} // namespace edm::pipeline
