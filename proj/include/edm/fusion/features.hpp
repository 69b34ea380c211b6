#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "edm/core/resize.hpp"
#include "edm/nn/checkpoint.hpp"
#include "edm/nn/modules.hpp"

namespace edm::fusion {

using nn::Parameter;
using nn::Tensor;

// Fixed stream order; fused features always concatenate in this order.
enum class Stream { Rgb = 0, Density = 1, Depth = 2 };

inline const char* to_string(Stream s) {
    switch (s) {
        case Stream::Rgb: return "rgb";
        case Stream::Density: return "density";
        case Stream::Depth: return "depth";
    }
    return "?";
}

inline char stream_symbol(Stream s) {
    switch (s) {
        case Stream::Rgb: return 'x';
        case Stream::Density: return 'y';
        case Stream::Depth: return 'z';
    }
    return '?';
}

struct FeatureTensor {
    Tensor values; // (C, 7, 7)
    Stream stream = Stream::Rgb;
    bool normalized = false;

    int channels() const { return values.dim(0); }
};

enum class BackboneKind { Vgg16, Reduced };

constexpr int kBackboneInputSide = 224;
constexpr int kFeatureSide = 7;
constexpr int kVgg16Channels = 512;
constexpr int kReducedChannels = 32;

// Environment variable naming a checkpoint with pretrained trunk weights.
constexpr const char* kWeightsEnvVar = "EDM_VGG16_WEIGHTS";

// Convolutional trunk mapping a (3,224,224) image to a (C,7,7) feature
// tensor. Vgg16 is the classifier-free 13-conv trunk (C=512); Reduced is a
// five-layer strided trunk (C=32) fast enough for CPU training and tests.
class Backbone {
public:
    Backbone(BackboneKind kind, Rng rng) : kind_(kind) {
        if (kind == BackboneKind::Vgg16) {
            const int plan[5] = {64, 128, 256, 512, 512};
            const int convs_per_block[5] = {2, 2, 3, 3, 3};
            int in_ch = 3;
            for (int b = 0; b < 5; ++b) {
                for (int c = 0; c < convs_per_block[b]; ++c) {
                    net_.add<nn::Conv2d>(in_ch, plan[b], 3, 1, 1, rng);
                    net_.add<nn::ReLU>();
                    in_ch = plan[b];
                }
                net_.add<nn::MaxPool2d>(2, 2);
            }
            out_channels_ = kVgg16Channels;
        } else {
            const int plan[5] = {8, 16, 24, 32, kReducedChannels};
            int in_ch = 3;
            for (int b = 0; b < 5; ++b) {
                net_.add<nn::Conv2d>(in_ch, plan[b], 3, 2, 1, rng);
                net_.add<nn::ReLU>();
                in_ch = plan[b];
            }
            out_channels_ = kReducedChannels;
        }
        // Pretrained weights are optional; random init otherwise (He normal).
        if (kind == BackboneKind::Vgg16) {
            if (const char* path = std::getenv(kWeightsEnvVar); path && *path) load_weights(path);
        }
    }

    BackboneKind kind() const { return kind_; }
    int out_channels() const { return out_channels_; }

    Tensor forward(const Tensor& x) { return net_.forward(x); }
    Tensor backward(const Tensor& grad_out) { return net_.backward(grad_out); }
    void collect_params(std::vector<Parameter*>& out) { net_.collect_params(out); }

    void load_weights(const std::string& path) {
        nn::Checkpoint ck = nn::load_checkpoint(path);
        std::vector<Parameter*> params;
        net_.collect_params(params);
        nn::assign_params(ck, params, path);
    }

private:
    BackboneKind kind_;
    int out_channels_ = 0;
    nn::Sequential net_;
};

// 1-channel streams are replicated to the trunk's three input channels.
inline Tensor replicate_channels(const Tensor& x) {
    require(x.ndim() == 3 && x.dim(0) == 1, "replicate_channels: input must be (1,H,W)");
    Tensor out({3, x.dim(1), x.dim(2)});
    for (int c = 0; c < 3; ++c)
        std::copy(x.data(), x.data() + x.numel(), out.data() + static_cast<std::size_t>(c) * x.numel());
    return out;
}

inline Tensor resize_tensor_image(const Tensor& x, int side) {
    if (x.dim(1) == side && x.dim(2) == side) return x;
    Tensor out({x.dim(0), side, side});
    for (int c = 0; c < x.dim(0); ++c) {
        Grid<double> g(x.dim(1), x.dim(2));
        for (int i = 0; i < x.dim(1); ++i)
            for (int j = 0; j < x.dim(2); ++j) g(i, j) = x.at3(c, i, j);
        Grid<double> r = resize_bilinear(g, side, side);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j) out.at3(c, i, j) = r(i, j);
    }
    return out;
}

inline FeatureTensor extract_features(const Tensor& image, Stream stream, Backbone& backbone,
                                      bool allow_resize = false) {
    require(image.ndim() == 3 && (image.dim(0) == 1 || image.dim(0) == 3),
            "extract_features: image must be (1,H,W) or (3,H,W)");
    Tensor x = image.dim(0) == 1 ? replicate_channels(image) : image;
    if (x.dim(1) != kBackboneInputSide || x.dim(2) != kBackboneInputSide) {
        require(allow_resize, "extract_features: input side " + std::to_string(x.dim(1)) +
                                  " does not match the backbone input side " +
                                  std::to_string(kBackboneInputSide) +
                                  " and resizing was not permitted");
        x = resize_tensor_image(x, kBackboneInputSide);
    }
    FeatureTensor ft;
    ft.values = backbone.forward(x);
    ft.stream = stream;
    ft.normalized = false;
    return ft;
}

enum class NormalizationMode { None, Zscore, Layer, LayerGroup };

inline const char* to_string(NormalizationMode m) {
    switch (m) {
        case NormalizationMode::None: return "none";
        case NormalizationMode::Zscore: return "zscore";
        case NormalizationMode::Layer: return "layer";
        case NormalizationMode::LayerGroup: return "layer_group";
    }
    return "?";
}

inline NormalizationMode normalization_from_string(const std::string& s) {
    if (s == "none") return NormalizationMode::None;
    if (s == "zscore") return NormalizationMode::Zscore;
    if (s == "layer") return NormalizationMode::Layer;
    if (s == "layer_group") return NormalizationMode::LayerGroup;
    fail("unknown normalization mode: " + s);
}

constexpr double kZscoreStdFloor = 1e-8;

// Per-channel mean/std fitted over TRAIN-set feature tensors of one stream.
struct ZscoreStats {
    std::vector<double> mean;
    std::vector<double> stddev; // population, floored at kZscoreStdFloor

    bool fitted() const { return !mean.empty(); }
};

inline ZscoreStats fit_zscore_stats(const std::vector<FeatureTensor>& features) {
    require(!features.empty(), "fit_zscore_stats: no features");
    const int c = features[0].channels();
    const int spatial = features[0].values.dim(1) * features[0].values.dim(2);
    ZscoreStats stats;
    stats.mean.assign(static_cast<std::size_t>(c), 0.0);
    stats.stddev.assign(static_cast<std::size_t>(c), 0.0);
    const double n = static_cast<double>(features.size()) * spatial;
    for (const auto& f : features) {
        require(f.channels() == c, "fit_zscore_stats: inconsistent channel counts");
        for (int ch = 0; ch < c; ++ch) {
            const double* p = f.values.data() + static_cast<std::size_t>(ch) * spatial;
            for (int i = 0; i < spatial; ++i) stats.mean[static_cast<std::size_t>(ch)] += p[i];
        }
    }
    for (auto& m : stats.mean) m /= n;
    for (const auto& f : features) {
        for (int ch = 0; ch < c; ++ch) {
            const double* p = f.values.data() + static_cast<std::size_t>(ch) * spatial;
            double m = stats.mean[static_cast<std::size_t>(ch)];
            for (int i = 0; i < spatial; ++i)
                stats.stddev[static_cast<std::size_t>(ch)] += (p[i] - m) * (p[i] - m);
        }
    }
    for (auto& s : stats.stddev) s = std::max(std::sqrt(s / n), kZscoreStdFloor);
    return stats;
}

inline FeatureTensor apply_zscore(const FeatureTensor& f, const ZscoreStats& stats) {
    require(stats.fitted(), "apply_zscore: statistics not fitted");
    require(static_cast<int>(stats.mean.size()) == f.channels(),
            "apply_zscore: channel count mismatch");
    FeatureTensor out = f;
    const int spatial = f.values.dim(1) * f.values.dim(2);
    for (int ch = 0; ch < f.channels(); ++ch) {
        double m = stats.mean[static_cast<std::size_t>(ch)];
        double inv = 1.0 / stats.stddev[static_cast<std::size_t>(ch)];
        double* p = out.values.data() + static_cast<std::size_t>(ch) * spatial;
        for (int i = 0; i < spatial; ++i) p[i] = (p[i] - m) * inv;
    }
    out.normalized = true;
    return out;
}

// Gradient of apply_zscore: scale by 1/sigma per channel.
inline Tensor zscore_backward(const Tensor& grad_out, const ZscoreStats& stats) {
    Tensor dx = grad_out;
    const int spatial = grad_out.dim(1) * grad_out.dim(2);
    for (int ch = 0; ch < grad_out.dim(0); ++ch) {
        double inv = 1.0 / stats.stddev[static_cast<std::size_t>(ch)];
        double* p = dx.data() + static_cast<std::size_t>(ch) * spatial;
        for (int i = 0; i < spatial; ++i) p[i] *= inv;
    }
    return dx;
}

// Channel-axis concatenation in fixed stream order.
inline Tensor fuse_features(const std::vector<FeatureTensor>& features) {
    require(!features.empty(), "fuse_features: no features");
    for (std::size_t i = 1; i < features.size(); ++i)
        require(static_cast<int>(features[i - 1].stream) < static_cast<int>(features[i].stream),
                "fuse_features: streams must be unique and ordered (rgb, density, depth)");
    std::vector<const Tensor*> parts;
    for (const auto& f : features) parts.push_back(&f.values);
    return nn::concat_channels(parts);
}

} // namespace edm::fusion
