#pragma once

#include <cstddef>
#include <vector>

#include "adam.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "fingers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace embodied {

struct EpochMetrics {
    double mean_loss = 0.0;     // example-weighted combined loss
    double train_accuracy = 0.0; // online accuracy of the train-mode forward passes
    std::size_t steps = 0;
};

// Copies rows of the (count,28,28) image tensor into a (b,28,28,1) batch.
template <typename T>
Tensor<T> gather_images(const Dataset<T>& data, const std::vector<std::size_t>& order,
                        std::size_t begin, std::size_t end) {
    const std::size_t b = end - begin;
    const std::size_t px = data.images.dim(1) * data.images.dim(2);
    Tensor<T> x({b, data.images.dim(1), data.images.dim(2), 1});
    for (std::size_t i = 0; i < b; ++i) {
        const T* s = data.images.data() + order[begin + i] * px;
        T* d = x.data() + i * px;
        for (std::size_t k = 0; k < px; ++k) d[k] = s[k];
    }
    return x;
}

template <typename T>
Tensor<T> finger_targets(const FingerCodeTable& table, const Dataset<T>& data,
                         const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    const std::size_t b = end - begin;
    Tensor<T> t({b, 16});
    for (std::size_t i = 0; i < b; ++i) {
        const auto& code = table.codes[data.labels[order[begin + i]]];
        for (std::size_t k = 0; k < 16; ++k) t.at2(i, k) = T(code[k]);
    }
    return t;
}

// One pass over the training data: shuffle with the provided stream, then
// forward/backward/adam_step per mini-batch, including the final short batch.
template <typename T>
EpochMetrics train_epoch(Network<T>& net, const Dataset<T>& data, std::size_t batch_size,
                         RngStream& shuffle_rng, RngStream& dropout_rng,
                         const LossWeights& weights, const FingerCodeTable& fingers,
                         AdamState<T>& state, const OptimizerConfig& opt) {
    const std::size_t n = data.count();
    if (n == 0) throw EmptyDataset("train_epoch on empty dataset");
    if (batch_size == 0) throw ConfigInvalid("batch size must be positive");
    std::vector<std::size_t> order = shuffle_rng.permutation(n);
    std::vector<Tensor<T>*> params = net.parameters();
    if (state.m.size() != params.size()) state.init_like(params);

    EpochMetrics metrics;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, n);
        const std::size_t b = end - begin;
        Tensor<T> xb = gather_images(data, order, begin, end);
        std::vector<std::uint8_t> yb(b);
        for (std::size_t i = 0; i < b; ++i) yb[i] = data.labels[order[begin + i]];
        Tensor<T> y1 = one_hot<T>(yb);

        typename Network<T>::Cache cache;
        auto out = net.forward(xb, Mode::Train, &dropout_rng, &cache);

        double h_c = categorical_cross_entropy(out.out1, y1);
        Tensor<T> dout1 = categorical_cross_entropy_grad(out.out1, y1);
        for (std::size_t i = 0; i < dout1.size(); ++i) dout1[i] *= T(weights.classification_weight);

        double h_aux = 0.0;
        Tensor<T> dout2;
        if (net.variant == Variant::Embodied) {
            Tensor<T> targets = finger_targets(fingers, data, order, begin, end);
            h_aux = binary_cross_entropy(*out.out2, targets);
            dout2 = binary_cross_entropy_grad(*out.out2, targets);
        } else if (net.variant == Variant::InceptionLike) {
            h_aux = categorical_cross_entropy(*out.out2, y1);
            dout2 = categorical_cross_entropy_grad(*out.out2, y1);
        }
        if (net.has_aux())
            for (std::size_t i = 0; i < dout2.size(); ++i) dout2[i] *= T(weights.embodied_weight);

        std::vector<Tensor<T>> grads =
            net.backward(cache, dout1, net.has_aux() ? &dout2 : nullptr);
        adam_step(params, grads, state, opt);

        const double batch_loss = net.has_aux()
                                      ? combined_loss(h_c, h_aux, weights)
                                      : weights.classification_weight * h_c;
        loss_sum += batch_loss * double(b);
        for (std::size_t i = 0; i < b; ++i)
            if (argmax_row(out.out1, i) == yb[i]) ++correct;
        ++metrics.steps;
    }
    metrics.mean_loss = loss_sum / double(n);
    metrics.train_accuracy = double(correct) / double(n);
    return metrics;
}

// Fraction of examples whose classification argmax matches the label.
// Forces Eval mode: dropout off, batch-norm running statistics.
template <typename T>
double evaluate(Network<T>& net, const Dataset<T>& data, std::size_t eval_batch = 256) {
    const std::size_t n = data.count();
    if (n == 0) throw EmptyDataset("evaluate on empty dataset");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += eval_batch) {
        const std::size_t end = std::min(begin + eval_batch, n);
        Tensor<T> xb = gather_images(data, order, begin, end);
        auto out = net.forward(xb, Mode::Eval);
        for (std::size_t i = 0; i < end - begin; ++i)
            if (argmax_row(out.out1, i) == data.labels[begin + i]) ++correct;
    }
    return double(correct) / double(n);
}

inline double whole_db_accuracy(std::size_t n_train, double train_acc, std::size_t n_test,
                                double test_acc) {
    return (double(n_train) * train_acc + double(n_test) * test_acc) /
           double(n_train + n_test);
}

} // namespace embodied
