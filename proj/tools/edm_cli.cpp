// Command-line front end for the energy-density estimation pipeline.
//
//   synth      generate a synthetic overhead-scene dataset
//   curate     load, validate, curate and split a dataset into a manifest
//   stats      energy distribution statistics for a manifest
//   build-gt   construct ground-truth energy density maps + dataset scale
//   train-gan  train the RGB -> density-map generator
//   infer-gan  generate density maps for every dish in a manifest
//   train      train the fusion regressor on selected streams
//   eval       evaluate a trained regressor on the TEST split
//   ablate     run the eight-row feature-combination study
//
// A JSON config file (--config) supplies defaults; explicit flags win. Every
// artifact-producing run writes provenance.json next to its outputs.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edm/pipeline/pipeline.hpp"

namespace {

using namespace edm;

nlohmann::json load_config_file(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    expect(in.is_open(), "cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

std::vector<fusion::Stream> parse_streams(const std::string& csv) {
    std::vector<fusion::Stream> out;
    for (const auto& name : split_csv_line(csv)) {
        if (name == "rgb") out.push_back(fusion::Stream::Rgb);
        else if (name == "density") out.push_back(fusion::Stream::Density);
        else if (name == "depth") out.push_back(fusion::Stream::Depth);
        else fail("unknown stream '" + name + "' (expected rgb, density, depth)");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    require(!out.empty(), "at least one stream is required");
    return out;
}

struct CommonTrainFlags {
    std::string manifest;
    std::string gen_dir;
    std::string gan_ckpt;
    std::string backbone = "reduced";
    int head_width = 0;
    int dilate = 5;
    int close = 5;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--manifest", manifest, "dataset manifest JSON")->required();
        cmd->add_option("--gen-dir", gen_dir,
                        "directory of generated density maps (infer-gan output)");
        cmd->add_option("--gan-ckpt", gan_ckpt, "generator checkpoint for on-the-fly density maps");
        cmd->add_option("--backbone", backbone, "feature trunk: vgg16 or reduced")
            ->check(CLI::IsMember({"vgg16", "reduced"}));
        cmd->add_option("--head-width", head_width, "regression head width (0 = backbone default)");
        cmd->add_option("--dilate", dilate, "depth dilation kernel (odd)");
        cmd->add_option("--close", close, "depth closing kernel (odd)");
    }

    fusion::FusionModelOptions model_options() const {
        fusion::FusionModelOptions m;
        m.backbone = backbone == "vgg16" ? fusion::BackboneKind::Vgg16 : fusion::BackboneKind::Reduced;
        m.head_width = head_width;
        return m;
    }

    harness::DepthOptions depth_options() const { return {dilate, close}; }
};

harness::TrainingConfig training_from(const nlohmann::json& file_cfg) {
    return harness::TrainingConfig::from_json(file_cfg.value("training", nlohmann::json::object()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy density mapping pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; explicit flags override its values");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth::SynthConfig synth_cfg;
    std::string synth_out;
    synth_cmd->add_option("--n", synth_cfg.n_dishes, "number of dishes")->required();
    synth_cmd->add_option("--side", synth_cfg.image_side, "image side in pixels");
    synth_cmd->add_option("--seed", synth_cfg.seed, "random seed");
    synth_cmd->add_option("--max-foods", synth_cfg.max_foods_per_dish, "max foods per dish");
    synth_cmd->add_option("--speckle", synth_cfg.speckle_fraction, "missing-depth fraction on food");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // ---- curate ----
    auto* curate_cmd = app.add_subcommand("curate", "validate, curate and split a dataset");
    pipeline::CurateOptions curate_opts;
    std::string curate_schema = "simple";
    std::string curate_exclude;
    curate_cmd->add_option("--root", curate_opts.root, "dataset root directory")->required();
    curate_cmd->add_option("--schema", curate_schema, "metadata schema: simple or nutrition5k")
        ->check(CLI::IsMember({"simple", "nutrition5k"}));
    curate_cmd->add_option("--max-ingredients", curate_opts.rules.max_ingredients_exclusive,
                           "keep dishes with fewer ingredients than this");
    curate_cmd->add_option("--min-kcal", curate_opts.rules.min_total_kcal, "minimum dish energy");
    curate_cmd->add_flag("--require-depth", curate_opts.rules.require_depth,
                         "drop dishes without a depth map");
    curate_cmd->add_option("--exclude", curate_exclude, "exclusion-id file (one dish_id per line)");
    curate_cmd->add_option("--train-fraction", curate_opts.train_fraction, "train fraction");
    curate_cmd->add_option("--strata", curate_opts.n_strata, "number of energy strata");
    curate_cmd->add_option("--seed", curate_opts.seed, "split seed");
    curate_cmd->add_option("--out", curate_opts.out_manifest, "output manifest path")->required();

    // ---- stats ----
    auto* stats_cmd = app.add_subcommand("stats", "energy distribution statistics");
    pipeline::StatsOptions stats_opts;
    stats_cmd->add_option("--manifest", stats_opts.manifest_path, "dataset manifest")->required();
    stats_cmd->add_option("--bins", stats_opts.n_bins, "histogram bins");
    stats_cmd->add_option("--out", stats_opts.out_dir, "output directory")->required();

    // ---- build-gt ----
    auto* gt_cmd = app.add_subcommand("build-gt", "build ground-truth energy density maps");
    pipeline::BuildGtOptions gt_opts;
    std::string scale_scope = "train";
    gt_cmd->add_option("--manifest", gt_opts.manifest_path, "dataset manifest")->required();
    gt_cmd->add_option("--out", gt_opts.out_dir, "output directory")->required();
    gt_cmd->add_option("--scale-scope", scale_scope, "scale statistics scope: train or all")
        ->check(CLI::IsMember({"train", "all"}));

    // ---- train-gan ----
    auto* tgan_cmd = app.add_subcommand("train-gan", "train the density-map generator");
    pipeline::TrainGanOptions tgan_opts;
    tgan_cmd->add_option("--manifest", tgan_opts.manifest_path, "manifest written by build-gt")
        ->required();
    tgan_cmd->add_option("--gt-dir", tgan_opts.gt_dir,
                         "ground-truth map directory (default: manifest dir)");
    tgan_cmd->add_option("--out", tgan_opts.out_checkpoint, "output checkpoint path")->required();
    tgan_cmd->add_option("--epochs", tgan_opts.config.epochs, "training epochs");
    tgan_cmd->add_option("--side", tgan_opts.config.image_side, "training resolution (power of two)");
    tgan_cmd->add_option("--lr", tgan_opts.config.learning_rate, "learning rate");
    tgan_cmd->add_option("--l1", tgan_opts.config.l1_weight, "L1 reconstruction weight");
    tgan_cmd->add_option("--base-channels", tgan_opts.config.base_channels, "generator width");
    tgan_cmd->add_option("--seed", tgan_opts.config.seed, "training seed");

    // ---- infer-gan ----
    auto* igan_cmd = app.add_subcommand("infer-gan", "generate density maps for a manifest");
    pipeline::InferGanOptions igan_opts;
    igan_cmd->add_option("--ckpt", igan_opts.checkpoint, "generator checkpoint")->required();
    igan_cmd->add_option("--manifest", igan_opts.manifest_path, "dataset manifest")->required();
    igan_cmd->add_option("--out", igan_opts.out_dir, "output directory")->required();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the fusion regressor");
    CommonTrainFlags train_flags;
    train_flags.add_to(train_cmd);
    std::string train_streams = "density,depth";
    std::string train_norm = "layer_group";
    std::string train_out;
    harness::TrainingConfig train_cfg;
    train_cmd->add_option("--streams", train_streams, "comma list of rgb,density,depth");
    train_cmd->add_option("--norm", train_norm, "normalization: none, zscore, layer, layer_group")
        ->check(CLI::IsMember({"none", "zscore", "layer", "layer_group"}));
    train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
    train_cmd->add_option("--lr", train_cfg.initial_lr, "initial learning rate");
    train_cmd->add_option("--batch", train_cfg.batch_size, "batch size");
    train_cmd->add_option("--output-scale", train_cfg.output_scale, "energy scaling factor");
    train_cmd->add_option("--seed", train_cfg.seed, "training seed");
    train_cmd->add_option("--out", train_out, "output model path")->required();

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained regressor on the TEST split");
    CommonTrainFlags eval_flags;
    std::string eval_model, eval_out;
    eval_cmd->add_option("--model", eval_model, "fusion model checkpoint")->required();
    eval_flags.add_to(eval_cmd);
    eval_cmd->add_option("--out", eval_out, "output directory")->required();

    // ---- ablate ----
    auto* ablate_cmd = app.add_subcommand("ablate", "run the eight-row feature study");
    CommonTrainFlags ablate_flags;
    std::string ablate_norm = "layer_group";
    std::string ablate_out;
    harness::TrainingConfig ablate_cfg;
    ablate_cmd->add_option("--norm", ablate_norm, "normalization used by the tilde rows")
        ->check(CLI::IsMember({"zscore", "layer", "layer_group"}));
    ablate_flags.add_to(ablate_cmd);
    ablate_cmd->add_option("--epochs", ablate_cfg.epochs, "training epochs per row");
    ablate_cmd->add_option("--lr", ablate_cfg.initial_lr, "initial learning rate");
    ablate_cmd->add_option("--batch", ablate_cfg.batch_size, "batch size");
    ablate_cmd->add_option("--output-scale", ablate_cfg.output_scale, "energy scaling factor");
    ablate_cmd->add_option("--seed", ablate_cfg.seed, "shared training seed");
    ablate_cmd->add_option("--out", ablate_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    try {
        nlohmann::json file_cfg = load_config_file(config_path);

        if (synth_cmd->parsed()) {
            auto manifest = pipeline::run_synth(synth_cfg, synth_out);
            std::cout << "synth: wrote " << manifest.records.size() << " dishes to " << synth_out
                      << "\n";
        } else if (curate_cmd->parsed()) {
            curate_opts.schema = curate_schema == "simple" ? data::MetadataSchema::Simple
                                                           : data::MetadataSchema::Nutrition5k;
            if (!curate_exclude.empty()) curate_opts.exclusion_file = curate_exclude;
            auto manifest = pipeline::run_curate(curate_opts);
            int train_n = 0, test_n = 0;
            for (const auto& [id, s] : manifest.split_assignment)
                (s == data::Split::Train ? train_n : test_n)++;
            std::cout << "curate: kept " << manifest.records.size() << " dishes (" << train_n
                      << " train / " << test_n << " test) -> " << curate_opts.out_manifest << "\n";
        } else if (stats_cmd->parsed()) {
            auto stats = pipeline::run_stats(stats_opts);
            std::cout << "stats: mean " << stats.mean_kcal << " kcal, std " << stats.std_kcal
                      << ", outlier fraction " << stats.outlier_fraction << " -> "
                      << stats_opts.out_dir << "\n";
        } else if (gt_cmd->parsed()) {
            gt_opts.scale_scope =
                scale_scope == "train" ? pipeline::ScaleScope::Train : pipeline::ScaleScope::All;
            auto result = pipeline::build_gt_density(gt_opts);
            std::cout << "build-gt: density_scale " << *result.manifest.density_scale << ", "
                      << result.warnings.size() << " warning(s) -> " << gt_opts.out_dir << "\n";
            for (const auto& w : result.warnings) std::cerr << "  warning: " << w << "\n";
        } else if (tgan_cmd->parsed()) {
            if (file_cfg.contains("gan")) {
                auto defaults = gan::GanConfig::from_json(file_cfg["gan"]);
                if (tgan_cmd->count("--epochs") == 0) tgan_opts.config.epochs = defaults.epochs;
                if (tgan_cmd->count("--side") == 0) tgan_opts.config.image_side = defaults.image_side;
                if (tgan_cmd->count("--lr") == 0)
                    tgan_opts.config.learning_rate = defaults.learning_rate;
                if (tgan_cmd->count("--l1") == 0) tgan_opts.config.l1_weight = defaults.l1_weight;
                if (tgan_cmd->count("--base-channels") == 0)
                    tgan_opts.config.base_channels = defaults.base_channels;
                if (tgan_cmd->count("--seed") == 0) tgan_opts.config.seed = defaults.seed;
            }
            auto result = pipeline::run_train_gan(tgan_opts);
            std::cout << "train-gan: " << result.history.size() << " epochs";
            if (!result.history.empty())
                std::cout << ", final g_total " << result.history.back().g_total << ", L1 "
                          << result.history.back().g_l1;
            std::cout << " -> " << tgan_opts.out_checkpoint << "\n";
        } else if (igan_cmd->parsed()) {
            pipeline::run_infer_gan(igan_opts);
            std::cout << "infer-gan: wrote generated maps to " << igan_opts.out_dir << "\n";
        } else if (train_cmd->parsed()) {
            harness::TrainingConfig base = training_from(file_cfg);
            if (train_cmd->count("--epochs") == 0) train_cfg.epochs = base.epochs;
            if (train_cmd->count("--lr") == 0) train_cfg.initial_lr = base.initial_lr;
            if (train_cmd->count("--batch") == 0) train_cfg.batch_size = base.batch_size;
            if (train_cmd->count("--output-scale") == 0) train_cfg.output_scale = base.output_scale;
            if (train_cmd->count("--seed") == 0) train_cfg.seed = base.seed;

            pipeline::TrainRegressorOptions opts;
            opts.manifest_path = train_flags.manifest;
            opts.ablation = fusion::AblationConfig::make(
                parse_streams(train_streams), fusion::normalization_from_string(train_norm));
            opts.training = train_cfg;
            opts.model = train_flags.model_options();
            opts.depth = train_flags.depth_options();
            opts.generated_dir = train_flags.gen_dir;
            opts.gan_checkpoint = train_flags.gan_ckpt;
            opts.out_model = train_out;
            auto result = pipeline::run_train_regressor(opts);
            std::cout << "train: " << opts.ablation.label << ", " << result.history.size()
                      << " epochs";
            if (!result.history.empty())
                std::cout << ", final loss " << result.history.back().train_loss;
            std::cout << " -> " << train_out << "\n";
        } else if (eval_cmd->parsed()) {
            pipeline::EvalOptions opts;
            opts.model_path = eval_model;
            opts.manifest_path = eval_flags.manifest;
            opts.generated_dir = eval_flags.gen_dir;
            opts.gan_checkpoint = eval_flags.gan_ckpt;
            opts.depth = eval_flags.depth_options();
            opts.out_dir = eval_out;
            auto report = pipeline::run_eval(opts);
            std::cout << "eval: " << report.label << " MAE " << report.mae_kcal << " kcal, MAPE "
                      << report.mape_percent << "% over " << report.per_dish.size()
                      << " test dishes -> " << eval_out << "\n";
        } else if (ablate_cmd->parsed()) {
            harness::TrainingConfig base = training_from(file_cfg);
            if (ablate_cmd->count("--epochs") == 0) ablate_cfg.epochs = base.epochs;
            if (ablate_cmd->count("--lr") == 0) ablate_cfg.initial_lr = base.initial_lr;
            if (ablate_cmd->count("--batch") == 0) ablate_cfg.batch_size = base.batch_size;
            if (ablate_cmd->count("--output-scale") == 0) ablate_cfg.output_scale = base.output_scale;
            if (ablate_cmd->count("--seed") == 0) ablate_cfg.seed = base.seed;

            pipeline::AblateOptions opts;
            opts.manifest_path = ablate_flags.manifest;
            opts.tilde_mode = fusion::normalization_from_string(ablate_norm);
            opts.training = ablate_cfg;
            opts.model = ablate_flags.model_options();
            opts.depth = ablate_flags.depth_options();
            opts.generated_dir = ablate_flags.gen_dir;
            opts.gan_checkpoint = ablate_flags.gan_ckpt;
            opts.out_dir = ablate_out;
            auto rows = pipeline::run_ablate(opts);
            for (const auto& row : rows) {
                std::cout << "  " << row.config.label << ": ";
                if (row.ok)
                    std::cout << "MAE " << row.report.mae_kcal << " kcal, MAPE "
                              << row.report.mape_percent << "%";
                else
                    std::cout << "FAILED (" << row.error << ")";
                if (row.ref_mae)
                    std::cout << "  [ref " << *row.ref_mae << " / " << *row.ref_mape << "]";
                std::cout << "\n";
            }
            std::cout << "ablate: " << rows.size() << " rows -> " << ablate_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
