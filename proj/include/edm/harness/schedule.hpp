#pragma once

#include <cmath>
#include <cstdint>

#include <json.hpp>

#include "edm/core/error.hpp"
#include "edm/core/strings.hpp"

namespace edm::harness {

struct TrainingConfig {
    double initial_lr = 5e-5;
    double lr_decay = 0.8;
    int decay_every_epochs = 10;
    int epochs = 50;
    double output_scale = 300.0;
    std::uint64_t seed = 0;
    int batch_size = 16;

    void validate() const {
        require(initial_lr > 0.0, "TrainingConfig: initial_lr must be positive");
        require(lr_decay > 0.0 && lr_decay <= 1.0, "TrainingConfig: lr_decay must be in (0, 1]");
        require(decay_every_epochs >= 1, "TrainingConfig: decay_every_epochs must be >= 1");
        require(epochs >= 0, "TrainingConfig: epochs must be >= 0");
        require(output_scale > 0.0, "TrainingConfig: output_scale must be positive");
        require(batch_size >= 1, "TrainingConfig: batch_size must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"initial_lr", initial_lr},
                {"lr_decay", lr_decay},
                {"decay_every_epochs", decay_every_epochs},
                {"epochs", epochs},
                {"output_scale", output_scale},
                {"seed", seed},
                {"batch_size", batch_size}};
    }

    static TrainingConfig from_json(const nlohmann::json& j) {
        TrainingConfig c;
        c.initial_lr = j.value("initial_lr", c.initial_lr);
        c.lr_decay = j.value("lr_decay", c.lr_decay);
        c.decay_every_epochs = j.value("decay_every_epochs", c.decay_every_epochs);
        c.epochs = j.value("epochs", c.epochs);
        c.output_scale = j.value("output_scale", c.output_scale);
        c.seed = j.value("seed", c.seed);
        c.batch_size = j.value("batch_size", c.batch_size);
        return c;
    }

    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

// Step decay: epochs 1..decay_every run at the initial rate, the first decay
// takes effect at epoch decay_every + 1.
inline double lr_at_epoch(const TrainingConfig& config, int epoch) {
    config.validate();
    require(epoch >= 1, "lr_at_epoch: epoch must be >= 1");
    int steps = (epoch - 1) / config.decay_every_epochs;
    return config.initial_lr * std::pow(config.lr_decay, steps);
}

// Sum of L1 and squared error in scaled space: |delta| + delta^2.
inline double compute_loss(double pred_scaled, double gt_scaled) {
    require(std::isfinite(pred_scaled) && std::isfinite(gt_scaled),
            "compute_loss: non-finite input");
    double delta = pred_scaled - gt_scaled;
    return std::abs(delta) + delta * delta;
}

// d(compute_loss)/d(pred_scaled); subgradient 0 at delta == 0.
inline double compute_loss_grad(double pred_scaled, double gt_scaled) {
    double delta = pred_scaled - gt_scaled;
    double sign = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
    return sign + 2.0 * delta;
}

} // namespace edm::harness
