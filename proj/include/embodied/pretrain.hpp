#pragma once

#include <cstdint>
#include <string>

#include "adam.hpp"
#include "error.hpp"
#include "fingers.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace embodied {

struct PretrainConfig {
    OptimizerConfig optimizer;
    long long step_cap = 5000;
    double loss_margin = 0.05; // after 10/10 argmax, continue until mean H_C drops here
    std::uint64_t seed = 42;
};

// Stage 1: full-batch training of a single 16->10 softmax layer on the ten
// (finger code, class) pairs. Stops once every code classifies correctly and
// the mean cross-entropy is within the margin; the step cap guards against
// degenerate tables (e.g. duplicate codes).
inline PretrainedLink pretrain_stage1(const FingerCodeTable& table, const PretrainConfig& cfg = {}) {
    cfg.optimizer.validate();
    Tensor<double> x({10, 16});
    Tensor<double> y({10, 10});
    for (std::size_t d = 0; d < 10; ++d) {
        for (std::size_t k = 0; k < 16; ++k) x.at2(d, k) = table.codes[d][k];
        y.at2(d, d) = 1.0;
    }

    DenseParams<double> layer;
    layer.weights = Tensor<double>({16, 10});
    layer.bias = Tensor<double>({10});
    {
        RngStream r(cfg.seed, "init/link");
        init_uniform(layer.weights, 16, 10, r);
    }

    std::vector<Tensor<double>*> params = {&layer.weights, &layer.bias};
    AdamState<double> state;
    state.init_like(params);

    long long step = 0;
    double loss = 0.0;
    bool all_correct = false;
    while (step < cfg.step_cap) {
        DenseCache<double> cache;
        Tensor<double> p = dense_forward(x, layer, Activation::Softmax, &cache);
        loss = categorical_cross_entropy(p, y);
        all_correct = true;
        for (std::size_t d = 0; d < 10; ++d)
            if (argmax_row(p, d) != d) {
                all_correct = false;
                break;
            }
        if (all_correct && loss <= cfg.loss_margin) break;
        Tensor<double> dp = categorical_cross_entropy_grad(p, y);
        DenseGrads<double> g = dense_backward(dp, layer, Activation::Softmax, cache);
        std::vector<Tensor<double>> grads;
        grads.push_back(std::move(g.dweights));
        grads.push_back(std::move(g.dbias));
        adam_step(params, grads, state, cfg.optimizer);
        ++step;
    }
    if (!(all_correct && loss <= cfg.loss_margin))
        throw DidNotConverge("stage-1 pre-training hit the step cap at " + std::to_string(cfg.step_cap) +
                             " steps (loss " + std::to_string(loss) + "); is the code table degenerate?");

    PretrainedLink link;
    link.weights = layer.weights;
    link.bias = layer.bias;
    link.steps_used = step;
    link.final_loss = loss;
    link.final_accuracy = 1.0;
    return link;
}

} // namespace embodied
