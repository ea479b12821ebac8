#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace embodied {

inline constexpr double kProbClip = 1e-7;

template <typename T>
T clip_prob(T p) {
    return std::min(std::max(p, T(kProbClip)), T(1) - T(kProbClip));
}

// Mean over the batch of H_C = (1/N)·Σ −y·log p, probabilities clipped before
// the log. Note the 1/N class normalizer: uniform p over 10 classes scores
// (1/10)·ln 10, not ln 10.
template <typename T>
T categorical_cross_entropy(const Tensor<T>& p, const Tensor<T>& y_onehot) {
    if (p.rank() != 2 || p.shape() != y_onehot.shape())
        throw ShapeMismatch("categorical_cross_entropy shapes");
    const std::size_t batch = p.dim(0), n = p.dim(1);
    if (batch == 0 || n == 0) throw ShapeMismatch("categorical_cross_entropy on empty tensor");
    T total = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        total -= y_onehot[i] * std::log(clip_prob(p[i]));
    return total / (T(batch) * T(n));
}

// Gradient w.r.t. p of the batch-mean H_C; zero where the clip saturates.
template <typename T>
Tensor<T> categorical_cross_entropy_grad(const Tensor<T>& p, const Tensor<T>& y_onehot) {
    if (p.rank() != 2 || p.shape() != y_onehot.shape())
        throw ShapeMismatch("categorical_cross_entropy shapes");
    const T scale = T(1) / (T(p.dim(0)) * T(p.dim(1)));
    Tensor<T> g(p.shape());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= T(kProbClip) || p[i] >= T(1) - T(kProbClip)) continue;
        g[i] = -y_onehot[i] / p[i] * scale;
    }
    return g;
}

// Mean over the batch of H_B = (1/K)·Σ [−y·log z − (1−y)·log(1−z)].
template <typename T>
T binary_cross_entropy(const Tensor<T>& z, const Tensor<T>& y) {
    if (z.rank() != 2 || z.shape() != y.shape())
        throw ShapeMismatch("binary_cross_entropy shapes");
    const std::size_t batch = z.dim(0), k = z.dim(1);
    if (batch == 0 || k == 0) throw ShapeMismatch("binary_cross_entropy on empty tensor");
    T total = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const T zc = clip_prob(z[i]);
        total -= y[i] * std::log(zc) + (T(1) - y[i]) * std::log(T(1) - zc);
    }
    return total / (T(batch) * T(k));
}

template <typename T>
Tensor<T> binary_cross_entropy_grad(const Tensor<T>& z, const Tensor<T>& y) {
    if (z.rank() != 2 || z.shape() != y.shape())
        throw ShapeMismatch("binary_cross_entropy shapes");
    const T scale = T(1) / (T(z.dim(0)) * T(z.dim(1)));
    Tensor<T> g(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] <= T(kProbClip) || z[i] >= T(1) - T(kProbClip)) continue;
        g[i] = (-y[i] / z[i] + (T(1) - y[i]) / (T(1) - z[i])) * scale;
    }
    return g;
}

// ------------------------------------------------------------- loss weighting

struct LossWeights {
    double classification_weight = 1.0;
    double embodied_weight = 1.0; // held in [0.1, 1]
};

// Auxiliary-loss weight per training-set size. Interpolation is linear in
// (log size, log weight) between anchors; outside the anchor range the end
// value holds. Every returned value is clamped into [0.1, 1].
struct WeightSchedule {
    std::vector<std::pair<std::size_t, double>> anchors;

    static WeightSchedule defaults() {
        return WeightSchedule{{{256, 0.5}, {512, 0.35}, {1024, 0.1}, {3200, 0.1}, {6400, 0.1}, {60000, 0.1}}};
    }

    void validate() const {
        if (anchors.empty()) throw ConfigInvalid("weight schedule has no anchors");
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (anchors[i].first == 0) throw ConfigInvalid("weight schedule anchor size must be positive");
            if (!(anchors[i].second > 0)) throw ConfigInvalid("weight schedule anchor weight must be positive");
            if (i > 0 && anchors[i].first <= anchors[i - 1].first)
                throw ConfigInvalid("weight schedule anchors must have strictly increasing sizes");
        }
    }

    std::string serialize() const {
        std::string s;
        for (const auto& [size, w] : anchors) {
            if (!s.empty()) s += ',';
            s += std::to_string(size) + ':';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", w);
            s += buf;
        }
        return s;
    }
};

inline double embodied_loss_weight(long long train_size, const WeightSchedule& schedule) {
    if (train_size <= 0) throw NonPositiveSize("training size " + std::to_string(train_size));
    schedule.validate();
    const auto clamp01 = [](double w) { return std::min(1.0, std::max(0.1, w)); };
    const auto& a = schedule.anchors;
    const auto n = std::size_t(train_size);
    if (n <= a.front().first) return clamp01(a.front().second);
    if (n >= a.back().first) return clamp01(a.back().second);
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (n > a[i].first) continue;
        const double x0 = std::log(double(a[i - 1].first)), x1 = std::log(double(a[i].first));
        const double t = (std::log(double(n)) - x0) / (x1 - x0);
        const double lw = std::log(a[i - 1].second) + t * (std::log(a[i].second) - std::log(a[i - 1].second));
        return clamp01(std::exp(lw));
    }
    return clamp01(a.back().second); // unreachable
}

inline double combined_loss(double h_c, double h_b, const LossWeights& w) {
    return w.classification_weight * h_c + w.embodied_weight * h_b;
}

// --------------------------------------------------------------------- labels

template <typename T>
Tensor<T> one_hot(const std::vector<std::uint8_t>& labels, std::size_t n_classes = 10) {
    Tensor<T> y({labels.size(), n_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) y.at2(i, labels[i]) = T(1);
    return y;
}

template <typename T>
std::size_t argmax_row(const Tensor<T>& t, std::size_t row) {
    std::size_t best = 0;
    T best_v = t.at2(row, 0);
    for (std::size_t j = 1; j < t.dim(1); ++j)
        if (t.at2(row, j) > best_v) {
            best_v = t.at2(row, j);
            best = j;
        }
    return best;
}

} // namespace embodied
