#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/core/strings.hpp"
#include "edm/fusion/features.hpp"
#include "edm/nn/adam.hpp"
#include "edm/nn/checkpoint.hpp"

namespace edm::fusion {

// One row of the feature-combination study: which streams feed the model and
// how their features are normalized before concatenation.
struct AblationConfig {
    std::vector<Stream> streams;
    NormalizationMode normalization = NormalizationMode::None;
    std::string label;

    static std::string make_label(const std::vector<Stream>& streams, NormalizationMode mode) {
        const bool tilde = mode != NormalizationMode::None;
        std::string body;
        for (std::size_t i = 0; i < streams.size(); ++i) {
            if (i) body += ", ";
            body += stream_symbol(streams[i]);
            if (tilde) body += "̃"; // combining tilde
            body += "_f";
        }
        return streams.size() > 1 ? "(" + body + ")" : body;
    }

    static AblationConfig make(std::vector<Stream> streams, NormalizationMode mode) {
        AblationConfig c;
        c.streams = std::move(streams);
        c.normalization = mode;
        c.label = make_label(c.streams, mode);
        c.validate();
        return c;
    }

    void validate() const {
        require(!streams.empty(), "AblationConfig: stream set must be non-empty");
        for (std::size_t i = 1; i < streams.size(); ++i)
            require(static_cast<int>(streams[i - 1]) < static_cast<int>(streams[i]),
                    "AblationConfig: streams must be unique and in (rgb, density, depth) order");
        require(label == make_label(streams, normalization),
                "AblationConfig: label does not match streams/normalization");
    }

    bool has(Stream s) const {
        for (Stream t : streams)
            if (t == s) return true;
        return false;
    }
};

// Two fully connected layers with a normalization layer in between. The
// LAYER_GROUP mode swaps the inner layer normalization for group
// normalization over groups of 32 channels.
class RegressionHead {
public:
    RegressionHead(int fused_size, int width, NormalizationMode mode, Rng rng)
        : fused_size_(fused_size), width_(width), mode_(mode) {
        fc1_ = std::make_unique<nn::Linear>(fused_size, width, rng);
        if (mode == NormalizationMode::LayerGroup)
            norm_ = std::make_unique<nn::GroupNorm>(width, 32);
        else
            norm_ = std::make_unique<nn::LayerNorm>(width);
        relu_ = std::make_unique<nn::ReLU>();
        fc2_ = std::make_unique<nn::Linear>(width, 1, rng);
    }

    int fused_size() const { return fused_size_; }
    int width() const { return width_; }

    // Scalar head output (the scaled energy s-hat).
    double forward(const Tensor& fused) {
        fused_shape_ = fused.shape();
        Tensor flat = fused.reshaped({static_cast<int>(fused.numel())});
        require(flat.dim(0) == fused_size_,
                "RegressionHead: fused size " + std::to_string(flat.dim(0)) +
                    " does not match head input size " + std::to_string(fused_size_));
        Tensor h = fc1_->forward(flat);
        h = norm_->forward(h);
        h = relu_->forward(h);
        Tensor out = fc2_->forward(h);
        return out[0];
    }

    // Gradient w.r.t. the fused tensor given d(loss)/d(s-hat).
    Tensor backward(double grad_scalar) {
        Tensor g({1});
        g[0] = grad_scalar;
        Tensor dh = fc2_->backward(g);
        dh = relu_->backward(dh);
        dh = norm_->backward(dh);
        Tensor dflat = fc1_->backward(dh);
        return dflat.reshaped(fused_shape_);
    }

    void collect_params(std::vector<Parameter*>& out) {
        fc1_->collect_params(out);
        norm_->collect_params(out);
        fc2_->collect_params(out);
    }

private:
    int fused_size_, width_;
    NormalizationMode mode_;
    std::unique_ptr<nn::Linear> fc1_;
    std::unique_ptr<nn::Module> norm_;
    std::unique_ptr<nn::ReLU> relu_;
    std::unique_ptr<nn::Linear> fc2_;
    std::vector<int> fused_shape_;
};

// e-hat = s-hat * output_scale; the head regresses in scaled space.
inline double regress_energy(const Tensor& fused, RegressionHead& head, double output_scale) {
    require(output_scale > 0.0, "regress_energy: output_scale must be positive");
    return head.forward(fused) * output_scale;
}

struct FusionModelOptions {
    BackboneKind backbone = BackboneKind::Reduced;
    int head_width = 0; // 0 = default for the backbone kind

    int effective_head_width() const {
        if (head_width > 0) return head_width;
        return backbone == BackboneKind::Vgg16 ? 4096 : 512;
    }
};

// The full estimation model: one trunk per active stream, per-stream feature
// normalization, channel concatenation, and the regression head. Backbones
// and head train jointly.
class FusionModel {
public:
    FusionModel(AblationConfig config, FusionModelOptions options, double output_scale, Rng rng)
        : config_(std::move(config)), options_(options), output_scale_(output_scale) {
        config_.validate();
        require(output_scale > 0.0, "FusionModel: output_scale must be positive");
        int idx = 0;
        for (Stream s : config_.streams) {
            backbones_.push_back(std::make_unique<Backbone>(options.backbone, rng.derive(10 + idx)));
            if (config_.normalization == NormalizationMode::Layer ||
                config_.normalization == NormalizationMode::LayerGroup)
                feature_norms_.push_back(std::make_unique<nn::LayerNorm>(backbones_.back()->out_channels()));
            else
                feature_norms_.push_back(nullptr);
            (void)s;
            ++idx;
        }
        const int c = backbones_[0]->out_channels();
        fused_size_ = c * static_cast<int>(config_.streams.size()) * kFeatureSide * kFeatureSide;
        head_ = std::make_unique<RegressionHead>(fused_size_, options.effective_head_width(),
                                                 config_.normalization, rng.derive(99));
    }

    const AblationConfig& config() const { return config_; }
    const FusionModelOptions& options() const { return options_; }
    double output_scale() const { return output_scale_; }
    int fused_size() const { return fused_size_; }
    RegressionHead& head() { return *head_; }
    Backbone& backbone(std::size_t i) { return *backbones_[i]; }

    bool needs_zscore() const { return config_.normalization == NormalizationMode::Zscore; }
    bool zscore_ready() const {
        if (!needs_zscore()) return true;
        for (const auto& s : zscore_)
            if (!s.fitted()) return false;
        return !zscore_.empty();
    }
    void set_zscore_stats(std::vector<ZscoreStats> stats) {
        require(stats.size() == config_.streams.size(),
                "FusionModel: one z-score statistic set per stream required");
        zscore_ = std::move(stats);
    }
    const std::vector<ZscoreStats>& zscore_stats() const { return zscore_; }

    // Raw trunk features for one dish, in stream order (used to fit z-score
    // statistics). Inputs: per-stream image tensors in [-1,1].
    std::vector<FeatureTensor> extract_raw(const std::map<Stream, Tensor>& inputs,
                                           bool allow_resize = true) {
        std::vector<FeatureTensor> feats;
        for (std::size_t i = 0; i < config_.streams.size(); ++i) {
            Stream s = config_.streams[i];
            auto it = inputs.find(s);
            require(it != inputs.end(),
                    std::string("FusionModel: missing input for stream ") + to_string(s));
            feats.push_back(extract_features(it->second, s, *backbones_[i], allow_resize));
        }
        return feats;
    }

    std::vector<FeatureTensor> normalize(std::vector<FeatureTensor> feats) {
        switch (config_.normalization) {
            case NormalizationMode::None: break;
            case NormalizationMode::Zscore: {
                require(zscore_ready(), "FusionModel: z-score statistics not fitted");
                for (std::size_t i = 0; i < feats.size(); ++i)
                    feats[i] = apply_zscore(feats[i], zscore_[i]);
                break;
            }
            case NormalizationMode::Layer:
            case NormalizationMode::LayerGroup: {
                for (std::size_t i = 0; i < feats.size(); ++i) {
                    feats[i].values = feature_norms_[i]->forward(feats[i].values);
                    feats[i].normalized = true;
                }
                break;
            }
        }
        return feats;
    }

    // Scaled-space prediction s-hat, keeping caches for backward().
    double forward_scaled(const std::map<Stream, Tensor>& inputs, bool allow_resize = true) {
        auto feats = normalize(extract_raw(inputs, allow_resize));
        return head_->forward(fuse_features(feats));
    }

    // Energy prediction in kcal.
    double predict(const std::map<Stream, Tensor>& inputs, bool allow_resize = true) {
        return forward_scaled(inputs, allow_resize) * output_scale_;
    }

    // Backpropagate d(loss)/d(s-hat) through head, normalization, trunks.
    void backward(double grad_scaled) {
        Tensor dfused = head_->backward(grad_scaled);
        std::vector<int> channel_counts;
        for (const auto& bb : backbones_) channel_counts.push_back(bb->out_channels());
        auto parts = nn::split_channels(dfused, channel_counts);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            Tensor g = parts[i];
            switch (config_.normalization) {
                case NormalizationMode::None: break;
                case NormalizationMode::Zscore: g = zscore_backward(g, zscore_[i]); break;
                case NormalizationMode::Layer:
                case NormalizationMode::LayerGroup: g = feature_norms_[i]->backward(g); break;
            }
            backbones_[i]->backward(g);
        }
    }

    std::vector<Parameter*> params() {
        std::vector<Parameter*> out;
        for (auto& bb : backbones_) bb->collect_params(out);
        for (auto& fn : feature_norms_)
            if (fn) fn->collect_params(out);
        head_->collect_params(out);
        return out;
    }

    nlohmann::json describe() const {
        nlohmann::json streams = nlohmann::json::array();
        for (Stream s : config_.streams) streams.push_back(to_string(s));
        return {{"streams", streams},
                {"normalization", to_string(config_.normalization)},
                {"label", config_.label},
                {"backbone", options_.backbone == BackboneKind::Vgg16 ? "vgg16" : "reduced"},
                {"head_width", options_.effective_head_width()},
                {"output_scale", output_scale_}};
    }

    void save(const std::string& path, const nlohmann::json& provenance = {}) {
        nlohmann::json meta = {{"kind", "fusion_model"}, {"model", describe()}};
        if (!provenance.is_null() && !provenance.empty()) meta["provenance"] = provenance;
        if (needs_zscore() && !zscore_.empty()) {
            nlohmann::json zs = nlohmann::json::array();
            for (const auto& s : zscore_)
                zs.push_back({{"mean", s.mean}, {"stddev", s.stddev}});
            meta["zscore"] = zs;
        }
        nn::save_checkpoint(path, meta, nn::named_params(params(), "f"));
    }

    static FusionModel load(const std::string& path) {
        nn::Checkpoint ck = nn::load_checkpoint(path);
        expect(ck.meta.value("kind", "") == "fusion_model", path + ": checkpoint is not a fusion model");
        const auto& mj = ck.meta.at("model");
        std::vector<Stream> streams;
        for (const auto& s : mj.at("streams")) {
            std::string name = s.get<std::string>();
            if (name == "rgb") streams.push_back(Stream::Rgb);
            else if (name == "density") streams.push_back(Stream::Density);
            else if (name == "depth") streams.push_back(Stream::Depth);
            else fail(path + ": unknown stream " + name);
        }
        AblationConfig config =
            AblationConfig::make(streams, normalization_from_string(mj.at("normalization")));
        FusionModelOptions options;
        options.backbone =
            mj.at("backbone").get<std::string>() == "vgg16" ? BackboneKind::Vgg16 : BackboneKind::Reduced;
        options.head_width = mj.at("head_width").get<int>();
        FusionModel model(config, options, mj.at("output_scale").get<double>(), Rng(0));
        if (ck.meta.contains("zscore")) {
            std::vector<ZscoreStats> zs;
            for (const auto& sj : ck.meta["zscore"]) {
                ZscoreStats s;
                s.mean = sj.at("mean").get<std::vector<double>>();
                s.stddev = sj.at("stddev").get<std::vector<double>>();
                zs.push_back(std::move(s));
            }
            model.set_zscore_stats(std::move(zs));
        }
        nn::assign_params(ck, model.params(), path);
        return model;
    }

private:
    AblationConfig config_;
    FusionModelOptions options_;
    double output_scale_;
    int fused_size_ = 0;
    std::vector<std::unique_ptr<Backbone>> backbones_;
    std::vector<std::unique_ptr<nn::LayerNorm>> feature_norms_;
    std::unique_ptr<RegressionHead> head_;
    std::vector<ZscoreStats> zscore_;
};

} // namespace edm::fusion
