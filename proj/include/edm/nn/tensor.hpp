#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "edm/core/error.hpp"
#include "edm/core/rng.hpp"

namespace edm::nn {

// Dense double-precision tensor, row-major. Images are stored planar (C,H,W).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (int d : shape_) {
            require(d > 0, "Tensor: dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        v_.assign(n, 0.0);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, double value) {
        Tensor t(std::move(shape));
        t.fill(value);
        return t;
    }

    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    std::size_t numel() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    // (C,H,W) accessor
    double& at3(int c, int i, int j) {
        return v_[(static_cast<std::size_t>(c) * dim(1) + i) * dim(2) + j];
    }
    double at3(int c, int i, int j) const {
        return v_[(static_cast<std::size_t>(c) * dim(1) + i) * dim(2) + j];
    }

    void fill(double v) { std::fill(v_.begin(), v_.end(), v); }

    Tensor reshaped(std::vector<int> shape) const {
        Tensor t;
        t.shape_ = std::move(shape);
        std::size_t n = 1;
        for (int d : t.shape_) n *= static_cast<std::size_t>(d);
        require(n == v_.size(), "Tensor::reshaped: element count mismatch");
        t.v_ = v_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : v_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape_[i]);
        return s + ")";
    }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && v_ == o.v_; }

private:
    std::vector<int> shape_;
    std::vector<double> v_;
};

inline void fill_normal(Tensor& t, Rng& rng, double mean, double stddev) {
    for (auto& v : t) v = rng.normal(mean, stddev);
}

// He initialization for layers followed by rectifiers.
inline void fill_he_normal(Tensor& t, Rng& rng, int fan_in) {
    fill_normal(t, rng, 0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

// Channel-axis concatenation of (C,H,W) tensors with equal spatial dims.
inline Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    require(!parts.empty(), "concat_channels: no inputs");
    int h = parts[0]->dim(1), w = parts[0]->dim(2);
    int c_total = 0;
    for (const Tensor* p : parts) {
        require(p->ndim() == 3, "concat_channels: inputs must be (C,H,W)");
        require(p->dim(1) == h && p->dim(2) == w, "concat_channels: spatial shape mismatch");
        c_total += p->dim(0);
    }
    Tensor out({c_total, h, w});
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
        std::copy(p->data(), p->data() + p->numel(), out.data() + offset);
        offset += p->numel();
    }
    return out;
}

// Inverse of concat_channels for gradients: slices along the channel axis.
inline std::vector<Tensor> split_channels(const Tensor& t, const std::vector<int>& channel_counts) {
    require(t.ndim() == 3, "split_channels: input must be (C,H,W)");
    int total = 0;
    for (int c : channel_counts) total += c;
    require(total == t.dim(0), "split_channels: channel counts do not sum to input channels");
    std::vector<Tensor> out;
    std::size_t offset = 0;
    for (int c : channel_counts) {
        Tensor part({c, t.dim(1), t.dim(2)});
        std::copy(t.data() + offset, t.data() + offset + part.numel(), part.data());
        offset += part.numel();
        out.push_back(std::move(part));
    }
    return out;
}

} // namespace edm::nn
