#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "edm/core/rng.hpp"
#include "edm/fusion/regressor.hpp"
#include "edm/harness/inputs.hpp"
#include "edm/harness/schedule.hpp"
#include "edm/nn/adam.hpp"

namespace edm::harness {

struct EpochStats {
    int epoch = 0; // 1-based
    double lr = 0.0;
    double train_loss = 0.0; // mean per-sample loss in scaled space
};

struct RegressorTrainResult {
    fusion::FusionModel model;
    std::vector<EpochStats> history;
};

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write history: " + path);
    out << "epoch,lr,train_loss\n";
    for (const auto& s : history)
        out << s.epoch << "," << format_double(s.lr) << "," << format_double(s.train_loss) << "\n";
    expect(out.good(), "write failed: " + path);
}

// Joint training of the per-stream trunks and the regression head on the
// TRAIN split. Supervision target is total_energy / output_scale, Adam under
// the step decay schedule, fixed-size shuffled batches drawn from the run seed.
inline RegressorTrainResult train_regressor(const data::DatasetManifest& manifest,
                                            const fusion::AblationConfig& ablation,
                                            const TrainingConfig& config,
                                            DishInputProvider& provider,
                                            fusion::FusionModelOptions options = {}) {
    ablation.validate();
    config.validate();
    auto train_records = manifest.in_split(data::Split::Train);
    expect(!train_records.empty(), "train_regressor: TRAIN split is empty");

    // every required stream must be available before training starts
    if (ablation.has(fusion::Stream::Density))
        expect(provider.has_density_source(),
               "train_regressor: density stream requires a generator (maps are generated, not "
               "ground truth)");
    if (auto* files = dynamic_cast<FileInputProvider*>(&provider)) {
        for (const data::DishRecord* r : train_records)
            if (auto problem = files->availability_problem(*r, ablation.streams))
                fail("train_regressor: " + *problem);
    }

    Rng master(config.seed);
    RegressorTrainResult result{
        fusion::FusionModel(ablation, options, config.output_scale, master.derive(1)), {}};
    fusion::FusionModel& model = result.model;

    // Z-score statistics are fitted once on TRAIN features from the freshly
    // initialized trunks and stay frozen during fine-tuning.
    if (model.needs_zscore()) {
        std::vector<std::vector<fusion::FeatureTensor>> per_stream(ablation.streams.size());
        for (const data::DishRecord* r : train_records) {
            auto feats = model.extract_raw(provider.inputs(*r, ablation.streams));
            for (std::size_t i = 0; i < feats.size(); ++i) per_stream[i].push_back(std::move(feats[i]));
        }
        std::vector<fusion::ZscoreStats> stats;
        for (const auto& feats : per_stream) stats.push_back(fusion::fit_zscore_stats(feats));
        model.set_zscore_stats(std::move(stats));
    }

    nn::Adam adam(model.params(), config.initial_lr);

    std::vector<std::size_t> order(train_records.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = lr_at_epoch(config, epoch);
        adam.set_lr(lr);
        Rng shuffle_rng = master.derive(1000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t b = 0;
        while (b < order.size()) {
            std::size_t batch_end = std::min(b + static_cast<std::size_t>(config.batch_size),
                                             order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - b);
            adam.zero_grad();
            for (std::size_t k = b; k < batch_end; ++k) {
                const data::DishRecord* r = train_records[order[k]];
                auto in = provider.inputs(*r, ablation.streams);
                double pred = model.forward_scaled(in);
                double target = r->total_energy_kcal / config.output_scale;
                epoch_loss += compute_loss(pred, target);
                model.backward(compute_loss_grad(pred, target) * inv_batch);
            }
            adam.step();
            b = batch_end;
        }
        epoch_loss /= static_cast<double>(order.size());
        expect(std::isfinite(epoch_loss), "train_regressor: non-finite loss at epoch " +
                                              std::to_string(epoch) + " (loss=" +
                                              format_double(epoch_loss) + ")");
        result.history.push_back({epoch, lr, epoch_loss});
    }
    return result;
}

// Predict-the-train-mean baseline over the same split; the reference point
// for end-to-end checks on synthetic data.
inline EvalReport mean_baseline_report(const data::DatasetManifest& manifest) {
    auto train_records = manifest.in_split(data::Split::Train);
    auto test_records = manifest.in_split(data::Split::Test);
    expect(!train_records.empty() && !test_records.empty(),
           "mean_baseline_report: empty split");
    double mean = 0.0;
    for (const data::DishRecord* r : train_records) mean += r->total_energy_kcal;
    mean /= static_cast<double>(train_records.size());
    std::vector<DishEval> rows;
    for (const data::DishRecord* r : test_records)
        rows.push_back({r->dish_id, r->total_energy_kcal, mean});
    return finalize_report("train-mean baseline", std::move(rows));
}

} // namespace edm::harness
