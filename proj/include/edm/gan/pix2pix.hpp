#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/core/resize.hpp"
#include "edm/core/strings.hpp"
#include "edm/nn/adam.hpp"
#include "edm/nn/checkpoint.hpp"
#include "edm/nn/modules.hpp"

// Conditional image-to-image generator for RGB -> energy-density translation:
// U-Net generator with skip connections and a patch-level discriminator,
// trained with a BCE adversarial term plus an L1 reconstruction term.

namespace edm::gan {

using nn::Parameter;
using nn::Tensor;

struct GanConfig {
    int image_side = 256;
    double l1_weight = 100.0;
    int epochs = 200;
    double learning_rate = 2e-4;
    std::uint64_t seed = 0;
    int base_channels = 64; // generator width; discriminator uses the same base

    void validate() const {
        require(image_side >= 64 && (image_side & (image_side - 1)) == 0,
                "GanConfig: image_side must be a power of two >= 64");
        require(l1_weight >= 0.0, "GanConfig: l1_weight must be >= 0");
        require(epochs >= 0, "GanConfig: epochs must be >= 0");
        require(learning_rate > 0.0, "GanConfig: learning_rate must be positive");
        require(base_channels >= 1, "GanConfig: base_channels must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"image_side", image_side},   {"l1_weight", l1_weight},
                {"epochs", epochs},           {"learning_rate", learning_rate},
                {"seed", seed},               {"base_channels", base_channels}};
    }

    static GanConfig from_json(const nlohmann::json& j) {
        GanConfig c;
        c.image_side = j.at("image_side").get<int>();
        c.l1_weight = j.at("l1_weight").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.base_channels = j.at("base_channels").get<int>();
        return c;
    }

    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

namespace detail {

inline void add_into(Tensor& dst, const Tensor& src) {
    require(dst.same_shape(src), "add_into: shape mismatch");
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

} // namespace detail

// Encoder-decoder with skip connections. Downsampling uses strided 4x4
// convolutions; upsampling is nearest-neighbor followed by a 3x3 convolution.
class UNetGenerator {
public:
    UNetGenerator(int image_side, int base_channels, Rng rng) : side_(image_side) {
        int levels = 0;
        for (int s = image_side; s > 4; s /= 2) ++levels; // bottleneck at 4x4
        nd_ = levels;
        for (int i = 0; i < nd_; ++i) ch_.push_back(std::min(base_channels << i, base_channels * 8));

        for (int i = 0; i < nd_; ++i) {
            int in_ch = i == 0 ? 3 : ch_[i - 1];
            down_convs_.push_back(
                std::make_unique<nn::Conv2d>(in_ch, ch_[i], 4, 2, 1, rng, nn::InitKind::Normal002));
            down_acts_.push_back(std::make_unique<nn::LeakyReLU>(0.2));
        }
        for (int idx = 0; idx < nd_ - 1; ++idx) {
            int k = nd_ - 1 - idx; // skip from encoder level k (1-based)
            int in_ch = (idx == 0 ? ch_[nd_ - 1] : ch_[k]) + ch_[k - 1];
            ups_.push_back(std::make_unique<nn::Upsample2x>());
            up_convs_.push_back(
                std::make_unique<nn::Conv2d>(in_ch, ch_[k - 1], 3, 1, 1, rng, nn::InitKind::Normal002));
            up_acts_.push_back(std::make_unique<nn::ReLU>());
        }
        final_up_ = std::make_unique<nn::Upsample2x>();
        out_conv_ = std::make_unique<nn::Conv2d>(ch_[0], 1, 3, 1, 1, rng, nn::InitKind::Normal002);
        out_act_ = std::make_unique<nn::Tanh>();
    }

    int image_side() const { return side_; }

    Tensor forward(const Tensor& x) {
        require(x.ndim() == 3 && x.dim(0) == 3 && x.dim(1) == side_ && x.dim(2) == side_,
                "UNetGenerator: expected (3," + std::to_string(side_) + "," +
                    std::to_string(side_) + "), got " + x.shape_string());
        enc_.clear();
        Tensor h = x;
        for (int i = 0; i < nd_; ++i) {
            h = down_acts_[i]->forward(down_convs_[i]->forward(h));
            enc_.push_back(h);
        }
        for (int idx = 0; idx < nd_ - 1; ++idx) {
            int k = nd_ - 1 - idx;
            Tensor u = ups_[idx]->forward(h);
            Tensor cat = nn::concat_channels({&u, &enc_[k - 1]});
            h = up_acts_[idx]->forward(up_convs_[idx]->forward(cat));
        }
        Tensor o = final_up_->forward(h);
        return out_act_->forward(out_conv_->forward(o));
    }

    Tensor backward(const Tensor& grad_out) {
        Tensor g = out_conv_->backward(out_act_->backward(grad_out));
        g = final_up_->backward(g);

        std::vector<Tensor> skip_grads(static_cast<std::size_t>(nd_));
        for (int idx = nd_ - 2; idx >= 0; --idx) {
            int k = nd_ - 1 - idx;
            Tensor dcat = up_convs_[idx]->backward(up_acts_[idx]->backward(g));
            int up_ch = dcat.dim(0) - ch_[k - 1];
            auto parts = nn::split_channels(dcat, {up_ch, ch_[k - 1]});
            if (skip_grads[static_cast<std::size_t>(k - 1)].empty())
                skip_grads[static_cast<std::size_t>(k - 1)] = parts[1];
            else
                detail::add_into(skip_grads[static_cast<std::size_t>(k - 1)], parts[1]);
            g = ups_[idx]->backward(parts[0]);
        }
        for (int i = nd_ - 1; i >= 0; --i) {
            if (!skip_grads[static_cast<std::size_t>(i)].empty())
                detail::add_into(g, skip_grads[static_cast<std::size_t>(i)]);
            g = down_convs_[i]->backward(down_acts_[i]->backward(g));
        }
        return g;
    }

    void collect_params(std::vector<Parameter*>& out) {
        for (auto& m : down_convs_) m->collect_params(out);
        for (auto& m : up_convs_) m->collect_params(out);
        out_conv_->collect_params(out);
    }

private:
    int side_;
    int nd_ = 0;
    std::vector<int> ch_;
    std::vector<std::unique_ptr<nn::Conv2d>> down_convs_;
    std::vector<std::unique_ptr<nn::LeakyReLU>> down_acts_;
    std::vector<std::unique_ptr<nn::Upsample2x>> ups_;
    std::vector<std::unique_ptr<nn::Conv2d>> up_convs_;
    std::vector<std::unique_ptr<nn::ReLU>> up_acts_;
    std::unique_ptr<nn::Upsample2x> final_up_;
    std::unique_ptr<nn::Conv2d> out_conv_;
    std::unique_ptr<nn::Tanh> out_act_;
    std::vector<Tensor> enc_;
};

// Patch discriminator over the (rgb, map) pair: logits per receptive patch.
class PatchDiscriminator {
public:
    PatchDiscriminator(int base_channels, Rng rng) {
        net_.add<nn::Conv2d>(4, base_channels, 4, 2, 1, rng, nn::InitKind::Normal002);
        net_.add<nn::LeakyReLU>(0.2);
        net_.add<nn::Conv2d>(base_channels, base_channels * 2, 4, 2, 1, rng, nn::InitKind::Normal002);
        net_.add<nn::LeakyReLU>(0.2);
        net_.add<nn::Conv2d>(base_channels * 2, 1, 4, 1, 1, rng, nn::InitKind::Normal002);
    }

    Tensor forward(const Tensor& rgb, const Tensor& map) {
        Tensor x = nn::concat_channels({&rgb, &map});
        return net_.forward(x);
    }

    // Returns the gradient w.r.t. the map input (the generator branch).
    Tensor backward_to_map(const Tensor& grad_logits) {
        Tensor dx = net_.backward(grad_logits);
        auto parts = nn::split_channels(dx, {3, 1});
        return parts[1];
    }

    void backward(const Tensor& grad_logits) { net_.backward(grad_logits); }

    void collect_params(std::vector<Parameter*>& out) { net_.collect_params(out); }

private:
    nn::Sequential net_;
};

// Numerically stable binary cross entropy with logits against a constant
// target; fills grad with d(mean loss)/d(logits).
inline double bce_with_logits(const Tensor& logits, double target, Tensor* grad = nullptr) {
    const double n = static_cast<double>(logits.numel());
    double loss = 0.0;
    if (grad) *grad = Tensor(logits.shape());
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        double z = logits[i];
        loss += std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
        if (grad) (*grad)[i] = (1.0 / (1.0 + std::exp(-z)) - target) / n;
    }
    return loss / n;
}

struct GanEpochStats {
    int epoch = 0;          // 1-based
    double d_loss = 0.0;    // mean discriminator loss
    double g_adv = 0.0;     // mean adversarial generator term
    double g_l1 = 0.0;      // mean absolute pixel error (unweighted)
    double g_l1_weighted = 0.0;
    double g_total = 0.0;
};

struct GeneratorModel {
    GanConfig config;
    std::shared_ptr<UNetGenerator> net;
    nlohmann::json provenance; // config hash, epochs completed, final losses

    std::vector<Parameter*> params() const {
        std::vector<Parameter*> out;
        net->collect_params(out);
        return out;
    }
};

struct GanPair {
    Tensor rgb;    // (3,S,S) in [-1,1]
    Tensor target; // (1,S,S) in [-1,1]
};

struct GanTrainResult {
    GeneratorModel model;
    std::vector<GanEpochStats> history;
};

// Deterministic inference; resizes when permitted, clamps output to [-1,1].
inline Tensor generate_density_map(const GeneratorModel& model, const Tensor& rgb,
                                   bool allow_resize = false) {
    require(rgb.ndim() == 3 && rgb.dim(0) == 3, "generate_density_map: rgb must be (3,H,W)");
    const int side = model.config.image_side;
    Tensor input = rgb;
    if (rgb.dim(1) != side || rgb.dim(2) != side) {
        require(allow_resize, "generate_density_map: input is " + rgb.shape_string() +
                                  " but the model expects side " + std::to_string(side) +
                                  " and resizing was not permitted");
        input = Tensor({3, side, side});
        for (int c = 0; c < 3; ++c) {
            Grid<double> g(rgb.dim(1), rgb.dim(2));
            for (int i = 0; i < rgb.dim(1); ++i)
                for (int j = 0; j < rgb.dim(2); ++j) g(i, j) = rgb.at3(c, i, j);
            Grid<double> r = resize_bilinear(g, side, side);
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j) input.at3(c, i, j) = r(i, j);
        }
    }
    Tensor out = model.net->forward(input);
    for (auto& v : out) v = std::clamp(v, -1.0, 1.0);
    return out;
}

inline GanTrainResult train_density_generator(const std::vector<GanPair>& pairs,
                                              const GanConfig& config) {
    config.validate();
    require(pairs.size() >= 2, "train_density_generator: need at least 2 training pairs");
    const int side = config.image_side;
    for (const auto& p : pairs) {
        require(p.rgb.ndim() == 3 && p.rgb.dim(0) == 3 && p.rgb.dim(1) == side && p.rgb.dim(2) == side,
                "train_density_generator: rgb pair shape mismatch, got " + p.rgb.shape_string());
        require(p.target.ndim() == 3 && p.target.dim(0) == 1 && p.target.dim(1) == side &&
                    p.target.dim(2) == side,
                "train_density_generator: target pair shape mismatch, got " + p.target.shape_string());
    }

    Rng master(config.seed);
    GanTrainResult result;
    result.model.config = config;
    result.model.net = std::make_shared<UNetGenerator>(side, config.base_channels, master.derive(1));
    PatchDiscriminator disc(config.base_channels, master.derive(2));

    std::vector<Parameter*> g_params = result.model.params();
    std::vector<Parameter*> d_params;
    disc.collect_params(d_params);
    nn::Adam adam_g(g_params, config.learning_rate, 0.5, 0.999);
    nn::Adam adam_d(d_params, config.learning_rate, 0.5, 0.999);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng = master.derive(1000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        GanEpochStats stats;
        stats.epoch = epoch;
        for (std::size_t idx : order) {
            const GanPair& pair = pairs[idx];

            // discriminator step: real pair up, generated pair down
            adam_d.zero_grad();
            Tensor grad;
            Tensor real_logits = disc.forward(pair.rgb, pair.target);
            double d_real = bce_with_logits(real_logits, 1.0, &grad);
            for (auto& v : grad) v *= 0.5;
            disc.backward(grad);

            Tensor fake = result.model.net->forward(pair.rgb); // detached from G
            Tensor fake_logits = disc.forward(pair.rgb, fake);
            double d_fake = bce_with_logits(fake_logits, 0.0, &grad);
            for (auto& v : grad) v *= 0.5;
            disc.backward(grad);
            adam_d.step();

            // generator step: fool the discriminator, stay close in L1
            adam_g.zero_grad();
            Tensor gen = result.model.net->forward(pair.rgb);
            Tensor gen_logits = disc.forward(pair.rgb, gen);
            double g_adv = bce_with_logits(gen_logits, 1.0, &grad);
            Tensor d_gen = disc.backward_to_map(grad); // discriminator grads discarded next step

            double l1 = 0.0;
            const double inv_n = 1.0 / static_cast<double>(gen.numel());
            for (std::size_t i = 0; i < gen.numel(); ++i) {
                double diff = gen[i] - pair.target[i];
                l1 += std::abs(diff);
                double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                d_gen[i] += config.l1_weight * sign * inv_n;
            }
            l1 *= inv_n;
            result.model.net->backward(d_gen);
            adam_g.step();

            stats.d_loss += 0.5 * (d_real + d_fake);
            stats.g_adv += g_adv;
            stats.g_l1 += l1;
        }
        const double inv = 1.0 / static_cast<double>(pairs.size());
        stats.d_loss *= inv;
        stats.g_adv *= inv;
        stats.g_l1 *= inv;
        stats.g_l1_weighted = config.l1_weight * stats.g_l1;
        stats.g_total = stats.g_adv + stats.g_l1_weighted;
        expect(std::isfinite(stats.g_total) && std::isfinite(stats.d_loss),
               "train_density_generator: non-finite loss at epoch " + std::to_string(epoch) +
                   " (g_total=" + format_double(stats.g_total) +
                   ", d_loss=" + format_double(stats.d_loss) + ")");
        result.history.push_back(stats);
    }

    nlohmann::json final_losses;
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        final_losses = {{"d_loss", last.d_loss},
                        {"g_adv", last.g_adv},
                        {"g_l1", last.g_l1},
                        {"g_total", last.g_total}};
    }
    result.model.provenance = {{"config_hash", config.hash()},
                               {"epochs_completed", static_cast<int>(result.history.size())},
                               {"final_losses", final_losses}};
    return result;
}

inline void save_generator(const std::string& path, const GeneratorModel& model) {
    std::vector<Parameter*> params = model.params();
    nlohmann::json meta = {{"kind", "density_generator"},
                           {"config", model.config.to_json()},
                           {"provenance", model.provenance}};
    nn::save_checkpoint(path, meta, nn::named_params(params, "g"));
}

inline GeneratorModel load_generator(const std::string& path) {
    nn::Checkpoint ck = nn::load_checkpoint(path);
    expect(ck.meta.value("kind", "") == "density_generator",
           path + ": checkpoint is not a density generator");
    GeneratorModel model;
    model.config = GanConfig::from_json(ck.meta.at("config"));
    model.provenance = ck.meta.value("provenance", nlohmann::json::object());
    Rng master(model.config.seed);
    model.net = std::make_shared<UNetGenerator>(model.config.image_side, model.config.base_channels,
                                                master.derive(1));
    std::vector<Parameter*> params = model.params();
    nn::assign_params(ck, params, path);
    return model;
}

inline void write_gan_history_csv(const std::string& path, const std::vector<GanEpochStats>& history) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write history: " + path);
    out << "epoch,d_loss,g_adv,g_l1,g_l1_weighted,g_total\n";
    for (const auto& s : history)
        out << s.epoch << "," << format_double(s.d_loss) << "," << format_double(s.g_adv) << ","
            << format_double(s.g_l1) << "," << format_double(s.g_l1_weighted) << ","
            << format_double(s.g_total) << "\n";
    expect(out.good(), "write failed: " + path);
}

} // namespace edm::gan
