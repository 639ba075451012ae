#pragma once

#include <cmath>
#include <vector>

#include "fino/layers.hpp"

namespace fino {

// Adaptive-moment optimizer over a parameter registry.
template <class T>
class Adam {
public:
    Adam(const ParamList<T>& params, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
         T eps = T(1e-8))
        : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto& p : params_) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }

    void step() {
        ++t_;
        T bc1 = T(1) - T(std::pow(double(beta1_), t_));
        T bc2 = T(1) - T(std::pow(double(beta2_), t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            TensorT<T>& w = *params_[i].value;
            const TensorT<T>& g = *params_[i].grad;
            TensorT<T>& m = m_[i];
            TensorT<T>& v = v_[i];
            for (size_t j = 0; j < w.size(); ++j) {
                m[j] = beta1_ * m[j] + (T(1) - beta1_) * g[j];
                v[j] = beta2_ * v[j] + (T(1) - beta2_) * g[j] * g[j];
                T mhat = m[j] / bc1;
                T vhat = v[j] / bc2;
                w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    ParamList<T> params_;
    std::vector<TensorT<T>> m_, v_;
    T lr_, beta1_, beta2_, eps_;
    int t_ = 0;
};

}  // namespace fino
