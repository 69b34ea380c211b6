#pragma once

#include <cmath>
#include <vector>

#include "edm/nn/modules.hpp"

namespace edm::nn {

class Adam {
public:
    Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (Parameter* p : params_) {
            m_.emplace_back(p->value.shape());
            v_.emplace_back(p->value.shape());
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void zero_grad() { zero_grads(params_); }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            Parameter& p = *params_[pi];
            Tensor& m = m_[pi];
            Tensor& v = v_[pi];
            for (std::size_t i = 0; i < p.value.numel(); ++i) {
                double g = p.grad[i];
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
                double mh = m[i] / bc1;
                double vh = v[i] / bc2;
                p.value[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

private:
    std::vector<Parameter*> params_;
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace edm::nn
