#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace embodied {

struct OptimizerConfig {
    double eta = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon_hat = 1e-8; // added to the square root of v-hat

    void validate() const {
        if (!(eta > 0)) throw ConfigInvalid("eta must be positive");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw ConfigInvalid("beta1/beta2 must lie in [0,1)");
        if (!(epsilon_hat > 0)) throw ConfigInvalid("epsilon_hat must be positive");
    }
};

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m, v;
    long long t = 0;

    void init_like(const std::vector<Tensor<T>*>& params) {
        m.clear();
        v.clear();
        for (const Tensor<T>* p : params) {
            m.emplace_back(p->shape());
            v.emplace_back(p->shape());
        }
        t = 0;
    }
};

// Bias-corrected Adam: t←t+1; m←β₁m+(1−β₁)g; v←β₂v+(1−β₂)g²;
// θ←θ−η·m̂/(√v̂+ε̂) with m̂=m/(1−β₁ᵗ), v̂=v/(1−β₂ᵗ).
template <typename T>
void adam_step(std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& state, const OptimizerConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeMismatch("adam_step parameter/gradient/state counts");
    state.t += 1;
    const T bc1 = T(1) - T(std::pow(cfg.beta1, double(state.t)));
    const T bc2 = T(1) - T(std::pow(cfg.beta2, double(state.t)));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<T>& p = *params[k];
        const Tensor<T>& g = grads[k];
        Tensor<T>& m = state.m[k];
        Tensor<T>& v = state.v[k];
        if (p.shape() != g.shape() || p.shape() != m.shape())
            throw ShapeMismatch("adam_step tensor shapes");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = T(cfg.beta1) * m[i] + (T(1) - T(cfg.beta1)) * g[i];
            v[i] = T(cfg.beta2) * v[i] + (T(1) - T(cfg.beta2)) * g[i] * g[i];
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            p[i] -= T(cfg.eta) * mhat / (std::sqrt(vhat) + T(cfg.epsilon_hat));
        }
    }
}

} // namespace embodied
