#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fingers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace embodied {

// Relative error with a floor: where both gradients vanish the central
// difference is pure rounding noise, so agreement is measured absolutely.
inline double grad_rel_err(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    return std::fabs(analytic - fd) / denom;
}

// Central finite difference of f w.r.t. one tensor element.
template <typename F>
double central_diff(F&& f, Tensor<double>& param, std::size_t index, double h = 1e-6) {
    const double saved = param[index];
    param[index] = saved + h;
    const double up = f();
    param[index] = saved - h;
    const double down = f();
    param[index] = saved;
    return (up - down) / (2.0 * h);
}

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;

    bool passes(double tol) const { return worst <= tol; }
};

// End-to-end check of one model variant: the combined training loss on a
// random batch, dropout masks frozen, against the analytic backward pass.
// Elements are sampled on a deterministic stride per tensor.
inline GradCheckReport gradcheck_model(Variant variant, std::size_t batch_size = 4,
                                       std::uint64_t seed = 42, double h = 1e-6,
                                       std::size_t samples_per_tensor = 8) {
    ModelSpec spec;
    spec.variant = variant;
    spec.loss_weights.embodied_weight = 0.35;
    if (variant == Variant::Embodied) {
        PretrainedLink link;
        RngStream lr(seed, "gradcheck/link");
        init_uniform(link.weights, 16, 10, lr);
        spec.pretrained_link = std::move(link);
    }
    Network<double> net = build_model<double>(spec, seed);

    RngStream xr(seed, "gradcheck/x");
    Tensor<double> x({batch_size, 28, 28, 1});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = xr.canonical();
    std::vector<std::uint8_t> labels(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) labels[i] = std::uint8_t(xr.below(10));
    Tensor<double> y1 = one_hot<double>(labels);
    const FingerCodeTable codes = default_finger_codes();
    Tensor<double> y2;
    if (variant == Variant::Embodied) {
        y2 = Tensor<double>({batch_size, 16});
        for (std::size_t i = 0; i < batch_size; ++i)
            for (std::size_t k = 0; k < 16; ++k) y2.at2(i, k) = codes.codes[labels[i]][k];
    } else if (variant == Variant::InceptionLike) {
        y2 = y1;
    }

    // Freeze one draw of dropout masks for every evaluation.
    RngStream mask_rng(seed, "gradcheck/masks");
    typename Network<double>::Cache warm;
    net.forward(x, Mode::Train, &mask_rng, &warm);
    const DropoutMasks<double> frozen = warm.masks;

    const LossWeights& w = spec.loss_weights;
    const auto loss_fn = [&]() {
        auto out = net.forward(x, Mode::Train, nullptr, nullptr, &frozen);
        const double h_c = categorical_cross_entropy(out.out1, y1);
        if (net.variant == Variant::Baseline) return w.classification_weight * h_c;
        const double h_aux = net.variant == Variant::Embodied
                                 ? binary_cross_entropy(*out.out2, y2)
                                 : categorical_cross_entropy(*out.out2, y2);
        return combined_loss(h_c, h_aux, w);
    };

    // Analytic gradients at the frozen masks.
    typename Network<double>::Cache cache;
    auto out = net.forward(x, Mode::Train, nullptr, &cache, &frozen);
    Tensor<double> dout1 = categorical_cross_entropy_grad(out.out1, y1);
    for (std::size_t i = 0; i < dout1.size(); ++i) dout1[i] *= w.classification_weight;
    Tensor<double> dout2;
    if (net.variant != Variant::Baseline) {
        dout2 = net.variant == Variant::Embodied ? binary_cross_entropy_grad(*out.out2, y2)
                                                 : categorical_cross_entropy_grad(*out.out2, y2);
        for (std::size_t i = 0; i < dout2.size(); ++i) dout2[i] *= w.embodied_weight;
    }
    std::vector<Tensor<double>> analytic =
        net.backward(cache, dout1, net.has_aux() ? &dout2 : nullptr);

    GradCheckReport report;
    std::vector<Tensor<double>*> params = net.parameters();
    const std::vector<std::string> names = net.parameter_names();
    RngStream pick(seed, "gradcheck/pick");
    for (std::size_t k = 0; k < params.size(); ++k) {
        GradCheckEntry entry;
        entry.name = names[k];
        Tensor<double>& p = *params[k];
        const std::size_t n = p.size();
        const std::size_t count = std::min(samples_per_tensor, n);
        const std::size_t stride = std::max<std::size_t>(1, n / count);
        std::size_t offset = pick.below(stride);
        for (std::size_t c = 0; c < count; ++c) {
            const std::size_t idx = (offset + c * stride) % n;
            const double fd = central_diff(loss_fn, p, idx, h);
            const double err = grad_rel_err(analytic[k][idx], fd);
            entry.max_rel_err = std::max(entry.max_rel_err, err);
            ++entry.checked;
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace embodied
