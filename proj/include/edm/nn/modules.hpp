#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "edm/nn/tensor.hpp"

// Minimal reverse-mode layer library. Modules process one sample at a time
// ((C,H,W) images or flat vectors); batches are handled by accumulating
// parameter gradients across samples before an optimizer step. Everything is
// double precision and single-threaded so runs are bit-reproducible.

namespace edm::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct Parameter {
    Tensor value;
    Tensor grad;

    void init_shape(std::vector<int> shape) {
        value = Tensor(shape);
        grad = Tensor(std::move(shape));
    }
};

enum class InitKind { HeNormal, Normal002, Zero };

inline void init_param(Parameter& p, Rng& rng, InitKind kind, int fan_in) {
    switch (kind) {
        case InitKind::HeNormal: fill_he_normal(p.value, rng, fan_in); break;
        case InitKind::Normal002: fill_normal(p.value, rng, 0.0, 0.02); break;
        case InitKind::Zero: p.value.fill(0.0); break;
    }
}

class Module {
public:
    virtual ~Module() = default;
    virtual Tensor forward(const Tensor& x) = 0;
    // Consumes the gradient w.r.t. the output, accumulates parameter
    // gradients (+=) and returns the gradient w.r.t. the input.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<Parameter*>& out) {}
};

namespace detail {

inline int conv_out_dim(int in, int k, int stride, int pad) {
    int out = (in + 2 * pad - k) / stride + 1;
    require(out > 0, "conv: output dimension would be empty");
    return out;
}

// (C,H,W) -> (C*k*k, OH*OW) patch matrix, zero padded.
inline void im2col(const Tensor& x, int k, int stride, int pad, std::vector<double>& cols,
                   int oh, int ow) {
    const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t l = static_cast<std::size_t>(oh) * ow;
    cols.assign(static_cast<std::size_t>(c_in) * k * k * l, 0.0);
    for (int c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                double* row = cols.data() + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * l;
                for (int oi = 0; oi < oh; ++oi) {
                    int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) continue;
                    for (int oj = 0; oj < ow; ++oj) {
                        int jj = oj * stride - pad + kj;
                        if (jj < 0 || jj >= w) continue;
                        row[static_cast<std::size_t>(oi) * ow + oj] = x.at3(c, ii, jj);
                    }
                }
            }
        }
    }
}

inline void col2im(const std::vector<double>& cols, int k, int stride, int pad, Tensor& dx,
                   int oh, int ow) {
    const int c_in = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
    const std::size_t l = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const double* row = cols.data() + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * l;
                for (int oi = 0; oi < oh; ++oi) {
                    int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) continue;
                    for (int oj = 0; oj < ow; ++oj) {
                        int jj = oj * stride - pad + kj;
                        if (jj < 0 || jj >= w) continue;
                        dx.at3(c, ii, jj) += row[static_cast<std::size_t>(oi) * ow + oj];
                    }
                }
            }
        }
    }
}

} // namespace detail

class Conv2d : public Module {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
           InitKind kind = InitKind::HeNormal)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad) {
        w_.init_shape({out_ch, in_ch * kernel * kernel});
        b_.init_shape({out_ch});
        init_param(w_, rng, kind, in_ch * kernel * kernel);
    }

    Tensor forward(const Tensor& x) override {
        require(x.ndim() == 3 && x.dim(0) == in_ch_, "Conv2d: bad input shape " + x.shape_string());
        x_ = x;
        const int oh = detail::conv_out_dim(x.dim(1), k_, stride_, pad_);
        const int ow = detail::conv_out_dim(x.dim(2), k_, stride_, pad_);
        detail::im2col(x, k_, stride_, pad_, cols_, oh, ow);
        const int kk = in_ch_ * k_ * k_;
        const auto l = static_cast<Eigen::Index>(oh) * ow;
        Tensor y({out_ch_, oh, ow});
        ConstMapMat wm(w_.value.data(), out_ch_, kk);
        ConstMapMat cm(cols_.data(), kk, l);
        MapMat ym(y.data(), out_ch_, l);
        ym.noalias() = wm * cm;
        for (int oc = 0; oc < out_ch_; ++oc)
            ym.row(oc).array() += b_.value[static_cast<std::size_t>(oc)];
        cols_.clear();
        cols_.shrink_to_fit();
        return y;
    }

    Tensor backward(const Tensor& grad_out) override {
        const int oh = grad_out.dim(1), ow = grad_out.dim(2);
        const int kk = in_ch_ * k_ * k_;
        const auto l = static_cast<Eigen::Index>(oh) * ow;
        detail::im2col(x_, k_, stride_, pad_, cols_, oh, ow);
        ConstMapMat dym(grad_out.data(), out_ch_, l);
        ConstMapMat cm(cols_.data(), kk, l);
        MapMat dwm(w_.grad.data(), out_ch_, kk);
        dwm.noalias() += dym * cm.transpose();
        for (int oc = 0; oc < out_ch_; ++oc)
            b_.grad[static_cast<std::size_t>(oc)] += dym.row(oc).sum();

        std::vector<double> dcols(static_cast<std::size_t>(kk) * l);
        MapMat dcm(dcols.data(), kk, l);
        ConstMapMat wm(w_.value.data(), out_ch_, kk);
        dcm.noalias() = wm.transpose() * dym;
        Tensor dx({in_ch_, x_.dim(1), x_.dim(2)});
        detail::col2im(dcols, k_, stride_, pad_, dx, oh, ow);
        cols_.clear();
        cols_.shrink_to_fit();
        return dx;
    }

    void collect_params(std::vector<Parameter*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
    Parameter w_, b_;
    Tensor x_;
    std::vector<double> cols_;
};

class Linear : public Module {
public:
    Linear(int in, int out, Rng& rng, InitKind kind = InitKind::HeNormal) : in_(in), out_(out) {
        w_.init_shape({out, in});
        b_.init_shape({out});
        init_param(w_, rng, kind, in);
    }

    Tensor forward(const Tensor& x) override {
        require(x.ndim() == 1 && x.dim(0) == in_, "Linear: bad input shape " + x.shape_string());
        x_ = x;
        Tensor y({out_});
        ConstMapMat wm(w_.value.data(), out_, in_);
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), in_);
        Eigen::Map<Eigen::VectorXd> yv(y.data(), out_);
        yv.noalias() = wm * xv;
        for (int o = 0; o < out_; ++o) y[static_cast<std::size_t>(o)] += b_.value[static_cast<std::size_t>(o)];
        return y;
    }

    Tensor backward(const Tensor& grad_out) override {
        ConstMapMat wm(w_.value.data(), out_, in_);
        Eigen::Map<const Eigen::VectorXd> dyv(grad_out.data(), out_);
        Eigen::Map<const Eigen::VectorXd> xv(x_.data(), in_);
        MapMat dwm(w_.grad.data(), out_, in_);
        dwm.noalias() += dyv * xv.transpose();
        for (int o = 0; o < out_; ++o) b_.grad[static_cast<std::size_t>(o)] += grad_out[static_cast<std::size_t>(o)];
        Tensor dx({in_});
        Eigen::Map<Eigen::VectorXd> dxv(dx.data(), in_);
        dxv.noalias() = wm.transpose() * dyv;
        return dx;
    }

    void collect_params(std::vector<Parameter*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }

private:
    int in_, out_;
    Parameter w_, b_;
    Tensor x_;
};

class ReLU : public Module {
public:
    Tensor forward(const Tensor& x) override {
        x_ = x;
        Tensor y = x;
        for (auto& v : y) v = std::max(0.0, v);
        return y;
    }
    Tensor backward(const Tensor& grad_out) override {
        Tensor dx = grad_out;
        for (std::size_t i = 0; i < dx.numel(); ++i)
            if (x_[i] <= 0.0) dx[i] = 0.0;
        return dx;
    }

private:
    Tensor x_;
};

class LeakyReLU : public Module {
public:
    explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
    Tensor forward(const Tensor& x) override {
        x_ = x;
        Tensor y = x;
        for (auto& v : y) v = v > 0.0 ? v : slope_ * v;
        return y;
    }
    Tensor backward(const Tensor& grad_out) override {
        Tensor dx = grad_out;
        for (std::size_t i = 0; i < dx.numel(); ++i)
            if (x_[i] <= 0.0) dx[i] *= slope_;
        return dx;
    }

private:
    double slope_;
    Tensor x_;
};

class Tanh : public Module {
public:
    Tensor forward(const Tensor& x) override {
        Tensor y = x;
        for (auto& v : y) v = std::tanh(v);
        y_ = y;
        return y;
    }
    Tensor backward(const Tensor& grad_out) override {
        Tensor dx = grad_out;
        for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] *= 1.0 - y_[i] * y_[i];
        return dx;
    }

private:
    Tensor y_;
};

class MaxPool2d : public Module {
public:
    explicit MaxPool2d(int kernel = 2, int stride = 2) : k_(kernel), stride_(stride) {}

    Tensor forward(const Tensor& x) override {
        require(x.ndim() == 3, "MaxPool2d: input must be (C,H,W)");
        const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
        const int oh = (h - k_) / stride_ + 1;
        const int ow = (w - k_) / stride_ + 1;
        in_shape_ = x.shape();
        Tensor y({c, oh, ow});
        argmax_.assign(y.numel(), 0);
        std::size_t o = 0;
        for (int ch = 0; ch < c; ++ch) {
            for (int oi = 0; oi < oh; ++oi) {
                for (int oj = 0; oj < ow; ++oj, ++o) {
                    double best = -1e300;
                    std::size_t best_idx = 0;
                    for (int ki = 0; ki < k_; ++ki) {
                        for (int kj = 0; kj < k_; ++kj) {
                            int ii = oi * stride_ + ki, jj = oj * stride_ + kj;
                            double v = x.at3(ch, ii, jj);
                            if (v > best) {
                                best = v;
                                best_idx = (static_cast<std::size_t>(ch) * h + ii) * w + jj;
                            }
                        }
                    }
                    y[o] = best;
                    argmax_[o] = best_idx;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor dx(in_shape_);
        for (std::size_t o = 0; o < grad_out.numel(); ++o) dx[argmax_[o]] += grad_out[o];
        return dx;
    }

private:
    int k_, stride_;
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

class Upsample2x : public Module {
public:
    Tensor forward(const Tensor& x) override {
        require(x.ndim() == 3, "Upsample2x: input must be (C,H,W)");
        in_shape_ = x.shape();
        const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
        Tensor y({c, 2 * h, 2 * w});
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < 2 * h; ++i)
                for (int j = 0; j < 2 * w; ++j) y.at3(ch, i, j) = x.at3(ch, i / 2, j / 2);
        return y;
    }
    Tensor backward(const Tensor& grad_out) override {
        Tensor dx(in_shape_);
        const int c = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < 2 * h; ++i)
                for (int j = 0; j < 2 * w; ++j) dx.at3(ch, i / 2, j / 2) += grad_out.at3(ch, i, j);
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

class Flatten : public Module {
public:
    Tensor forward(const Tensor& x) override {
        in_shape_ = x.shape();
        return x.reshaped({static_cast<int>(x.numel())});
    }
    Tensor backward(const Tensor& grad_out) override { return grad_out.reshaped(in_shape_); }

private:
    std::vector<int> in_shape_;
};

constexpr double kNormEps = 1e-5;

// Mean-0/variance-1 over all elements of one sample, population statistics,
// no affine. Shared by LayerNorm and the feature-level moment checks.
inline Tensor layer_normalize(const Tensor& x) {
    const double n = static_cast<double>(x.numel());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    Tensor y = x;
    for (auto& v : y) v = (v - mean) * inv;
    return y;
}

// Layer normalization over the whole sample with learned affine. For (C,H,W)
// inputs the affine is per channel; for vectors it is per element.
class LayerNorm : public Module {
public:
    explicit LayerNorm(int affine_size) : affine_size_(affine_size) {
        gamma_.init_shape({affine_size});
        beta_.init_shape({affine_size});
        gamma_.value.fill(1.0);
    }

    Tensor forward(const Tensor& x) override {
        require((x.ndim() == 3 && x.dim(0) == affine_size_) ||
                    (x.ndim() == 1 && x.dim(0) == affine_size_),
                "LayerNorm: input shape " + x.shape_string() + " does not match affine size " +
                    std::to_string(affine_size_));
        xhat_ = forward_stats(x);
        group_span_ = x.numel() / static_cast<std::size_t>(affine_size_);
        Tensor y = xhat_;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            std::size_t g = i / group_span_;
            y[i] = gamma_.value[g] * y[i] + beta_.value[g];
        }
        return y;
    }

    Tensor backward(const Tensor& grad_out) override {
        const std::size_t n = grad_out.numel();
        Tensor g({static_cast<int>(n)});
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t gi = i / group_span_;
            gamma_.grad[gi] += grad_out[i] * xhat_[i];
            beta_.grad[gi] += grad_out[i];
            g[i] = grad_out[i] * gamma_.value[gi];
        }
        double mean_g = 0.0, mean_gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_g += g[i];
            mean_gx += g[i] * xhat_[i];
        }
        mean_g /= static_cast<double>(n);
        mean_gx /= static_cast<double>(n);
        Tensor dx = grad_out; // shape carrier
        for (std::size_t i = 0; i < n; ++i)
            dx[i] = inv_ * (g[i] - mean_g - xhat_[i] * mean_gx);
        return dx;
    }

    void collect_params(std::vector<Parameter*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

private:
    // like layer_normalize but keeps the inverse stddev for backward
    Tensor forward_stats(const Tensor& x) {
        const double n = static_cast<double>(x.numel());
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : x) var += (v - mean) * (v - mean);
        var /= n;
        inv_ = 1.0 / std::sqrt(var + kNormEps);
        Tensor y = x;
        for (auto& v : y) v = (v - mean) * inv_;
        return y;
    }

    int affine_size_;
    Parameter gamma_, beta_;
    Tensor xhat_;
    std::size_t group_span_ = 1;
    double inv_ = 1.0;

public:
    // expose normalized (pre-affine) activation of the last forward
    const Tensor& last_pre_affine() const { return xhat_; }
};

// Group normalization over a flat feature vector: channels are split into
// groups of group_size, each group is normalized to mean 0 / variance 1,
// with per-channel affine.
class GroupNorm : public Module {
public:
    GroupNorm(int channels, int group_size = 32) : channels_(channels), group_size_(group_size) {
        require(group_size >= 1 && channels % group_size == 0,
                "GroupNorm: channels must be divisible by group_size");
        gamma_.init_shape({channels});
        beta_.init_shape({channels});
        gamma_.value.fill(1.0);
    }

    Tensor forward(const Tensor& x) override {
        require(x.ndim() == 1 && x.dim(0) == channels_, "GroupNorm: bad input shape");
        xhat_ = x;
        inv_.assign(static_cast<std::size_t>(channels_ / group_size_), 0.0);
        for (int g = 0; g < channels_ / group_size_; ++g) {
            double mean = 0.0;
            for (int i = 0; i < group_size_; ++i) mean += x[static_cast<std::size_t>(g * group_size_ + i)];
            mean /= group_size_;
            double var = 0.0;
            for (int i = 0; i < group_size_; ++i) {
                double d = x[static_cast<std::size_t>(g * group_size_ + i)] - mean;
                var += d * d;
            }
            var /= group_size_;
            double inv = 1.0 / std::sqrt(var + kNormEps);
            inv_[static_cast<std::size_t>(g)] = inv;
            for (int i = 0; i < group_size_; ++i) {
                std::size_t idx = static_cast<std::size_t>(g * group_size_ + i);
                xhat_[idx] = (x[idx] - mean) * inv;
            }
        }
        Tensor y = xhat_;
        for (int c = 0; c < channels_; ++c) {
            std::size_t i = static_cast<std::size_t>(c);
            y[i] = gamma_.value[i] * y[i] + beta_.value[i];
        }
        return y;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor dx({channels_});
        for (int g = 0; g < channels_ / group_size_; ++g) {
            double mean_g = 0.0, mean_gx = 0.0;
            std::vector<double> gv(static_cast<std::size_t>(group_size_));
            for (int i = 0; i < group_size_; ++i) {
                std::size_t idx = static_cast<std::size_t>(g * group_size_ + i);
                gamma_.grad[idx] += grad_out[idx] * xhat_[idx];
                beta_.grad[idx] += grad_out[idx];
                gv[static_cast<std::size_t>(i)] = grad_out[idx] * gamma_.value[idx];
                mean_g += gv[static_cast<std::size_t>(i)];
                mean_gx += gv[static_cast<std::size_t>(i)] * xhat_[idx];
            }
            mean_g /= group_size_;
            mean_gx /= group_size_;
            double inv = inv_[static_cast<std::size_t>(g)];
            for (int i = 0; i < group_size_; ++i) {
                std::size_t idx = static_cast<std::size_t>(g * group_size_ + i);
                dx[idx] = inv * (gv[static_cast<std::size_t>(i)] - mean_g - xhat_[idx] * mean_gx);
            }
        }
        return dx;
    }

    void collect_params(std::vector<Parameter*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

private:
    int channels_, group_size_;
    Parameter gamma_, beta_;
    Tensor xhat_;
    std::vector<double> inv_;
};

class Sequential : public Module {
public:
    Sequential() = default;

    template <typename M, typename... Args>
    M* add(Args&&... args) {
        auto m = std::make_unique<M>(std::forward<Args>(args)...);
        M* raw = m.get();
        mods_.push_back(std::move(m));
        return raw;
    }

    Tensor forward(const Tensor& x) override {
        Tensor t = x;
        for (auto& m : mods_) t = m->forward(t);
        return t;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor g = grad_out;
        for (auto it = mods_.rbegin(); it != mods_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    void collect_params(std::vector<Parameter*>& out) override {
        for (auto& m : mods_) m->collect_params(out);
    }

    std::size_t size() const { return mods_.size(); }

private:
    std::vector<std::unique_ptr<Module>> mods_;
};

inline void zero_grads(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->grad.fill(0.0);
}

} // namespace edm::nn
