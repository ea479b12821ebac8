#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "fingers.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace embodied {

enum class Variant { Baseline, InceptionLike, Embodied };

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::InceptionLike: return "inception";
        case Variant::Embodied: return "embodied";
    }
    return "?";
}

inline std::string variant_display_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "Baseline";
        case Variant::InceptionLike: return "Inception-like";
        case Variant::Embodied: return "Embodied";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "baseline") return Variant::Baseline;
    if (s == "inception" || s == "inception-like" || s == "inception_like") return Variant::InceptionLike;
    if (s == "embodied") return Variant::Embodied;
    throw ConfigInvalid("unknown model variant '" + s + "'");
}

struct PretrainedLink {
    Tensor<double> weights{{16, 10}}; // rows are the 16 sigmoid units
    Tensor<double> bias{{10}};
    long long steps_used = 0;
    double final_loss = 0.0;
    double final_accuracy = 0.0;
};

struct ModelSpec {
    Variant variant = Variant::Baseline;
    std::optional<PretrainedLink> pretrained_link;
    LossWeights loss_weights;
};

// Normalization hyperparameters and the initialization gains, surfaced so runs
// can record them and experiments can override them.
struct NetworkConfig {
    double bn_momentum = 0.75;
    double bn_epsilon = 3e-3;
    double drop_conv = 0.2;
    double drop_dense = 0.5;
    // sqrt(2) He gain on the ReLU-activated layers; the classifier stays at 1.
    double relu_init_gain = 1.4142135623730951;
    // Auxiliary heads start small so an untrained head cannot swamp the
    // classifier through the pre-trained link in the first few steps.
    double aux_init_gain = 1.0;
};

template <typename T>
struct DropoutMasks {
    Tensor<T> conv1, conv2, dense1, dense2;
};

template <typename T>
class Network {
  public:
    Variant variant = Variant::Baseline;
    ConvParams<T> conv1, conv2;
    BatchNormParams<T> bn1, bn2, bn3, bn4;
    DenseParams<T> dense120, dense84, aux, classifier;
    NetworkConfig config;
    std::uint64_t init_seed = 0;

    struct Cache {
        Tensor<T> x;
        ConvCache<T> cc1, cc2;
        Tensor<T> a1, a2;          // post-ReLU conv activations
        BnCache<T> bc1, bc2, bc3, bc4;
        Tensor<T> p1, p2;          // pooled activations (pre-dropout)
        DropoutMasks<T> masks;
        Tensor<T> flat;            // (b, 784)
        DenseCache<T> dcAux, dc120, dc84, dcCls;
        Tensor<T> d1_out, d2_out;  // post-ReLU dense activations (pre-BN)
        Tensor<T> cls_in;          // classifier input (concat for Embodied)
    };

    struct ForwardOut {
        Tensor<T> out1;                // (b, 10) softmax
        std::optional<Tensor<T>> out2; // (b,16) sigmoid or (b,10) softmax
    };

    bool has_aux() const { return variant != Variant::Baseline; }
    std::size_t aux_units() const { return variant == Variant::Embodied ? 16 : 10; }
    std::size_t classifier_in() const { return variant == Variant::Embodied ? 100 : 84; }

    // Trainable parameters, in a fixed order mirrored by backward().
    std::vector<Tensor<T>*> parameters() {
        std::vector<Tensor<T>*> p = {
            &conv1.kernels, &conv1.bias, &bn1.gamma, &bn1.beta,
            &conv2.kernels, &conv2.bias, &bn2.gamma, &bn2.beta,
            &dense120.weights, &dense120.bias, &bn3.gamma, &bn3.beta,
            &dense84.weights, &dense84.bias, &bn4.gamma, &bn4.beta,
        };
        if (has_aux()) {
            p.push_back(&aux.weights);
            p.push_back(&aux.bias);
        }
        p.push_back(&classifier.weights);
        p.push_back(&classifier.bias);
        return p;
    }

    std::vector<std::string> parameter_names() const {
        std::vector<std::string> n = {
            "conv1.kernels", "conv1.bias", "bn1.gamma", "bn1.beta",
            "conv2.kernels", "conv2.bias", "bn2.gamma", "bn2.beta",
            "dense120.weights", "dense120.bias", "bn3.gamma", "bn3.beta",
            "dense84.weights", "dense84.bias", "bn4.gamma", "bn4.beta",
        };
        if (has_aux()) {
            n.push_back("aux.weights");
            n.push_back("aux.bias");
        }
        n.push_back("classifier.weights");
        n.push_back("classifier.bias");
        return n;
    }

    // Non-trainable state that checkpoints must carry.
    std::vector<std::pair<std::string, Tensor<T>*>> running_stats() {
        return {{"bn1.running_mean", &bn1.running_mean}, {"bn1.running_var", &bn1.running_var},
                {"bn2.running_mean", &bn2.running_mean}, {"bn2.running_var", &bn2.running_var},
                {"bn3.running_mean", &bn3.running_mean}, {"bn3.running_var", &bn3.running_var},
                {"bn4.running_mean", &bn4.running_mean}, {"bn4.running_var", &bn4.running_var}};
    }

    std::vector<std::pair<std::string, std::size_t>> param_count() const {
        std::vector<std::pair<std::string, std::size_t>> c = {
            {"conv1", conv1.param_count()},
            {"bn1", bn1.param_count()},
            {"conv2", conv2.param_count()},
            {"bn2", bn2.param_count()},
            {"dense120", dense120.param_count()},
            {"bn3", bn3.param_count()},
            {"dense84", dense84.param_count()},
            {"bn4", bn4.param_count()},
        };
        if (has_aux()) c.emplace_back("aux", aux.param_count());
        c.emplace_back("classifier", classifier.param_count());
        return c;
    }

    ForwardOut forward(const Tensor<T>& x, Mode mode, RngStream* rng = nullptr,
                       Cache* cache = nullptr, const DropoutMasks<T>* frozen = nullptr) {
        if (x.rank() != 4 || x.dim(1) != 28 || x.dim(2) != 28 || x.dim(3) != 1)
            throw ShapeMismatch("network input must be (batch,28,28,1)");
        if (mode == Mode::Train && !rng && !frozen)
            throw MissingForwardState("train-mode forward needs an rng stream or frozen masks");
        const std::size_t b = x.dim(0);
        Cache local;
        Cache& c = cache ? *cache : local;
        const bool keep = cache != nullptr;
        if (keep) c.x = x;

        // block 1: conv -> ReLU -> BN -> pool -> dropout
        Tensor<T> h = conv2d_same_forward(x, conv1, keep ? &c.cc1 : nullptr);
        relu_inplace(h);
        if (keep) c.a1 = h;
        h = batchnorm_forward(h.reshaped({b * 28 * 28, std::size_t(6)}), bn1, mode, keep ? &c.bc1 : nullptr)
                .reshaped({b, 28, 28, 6});
        h = avgpool_same_forward(h); // (b,14,14,6)
        if (keep) c.p1 = h;
        h = dropout_forward(h, config.drop_conv, mode, *drop_rng(rng), keep ? &c.masks.conv1 : nullptr,
                            frozen ? &frozen->conv1 : nullptr);

        // block 2
        h = conv2d_same_forward(h, conv2, keep ? &c.cc2 : nullptr);
        relu_inplace(h);
        if (keep) c.a2 = h;
        h = batchnorm_forward(h.reshaped({b * 14 * 14, std::size_t(16)}), bn2, mode, keep ? &c.bc2 : nullptr)
                .reshaped({b, 14, 14, 16});
        h = avgpool_same_forward(h); // (b,7,7,16)
        if (keep) c.p2 = h;
        h = dropout_forward(h, config.drop_conv, mode, *drop_rng(rng), keep ? &c.masks.conv2 : nullptr,
                            frozen ? &frozen->conv2 : nullptr);

        Tensor<T> flat = h.reshaped({b, std::size_t(784)});
        if (keep) c.flat = flat;

        // auxiliary branch straight off the flatten (no dropout/batch-norm)
        std::optional<Tensor<T>> out2;
        if (has_aux()) {
            const Activation act = variant == Variant::Embodied ? Activation::Sigmoid : Activation::Softmax;
            out2 = dense_forward(flat, aux, act, keep ? &c.dcAux : nullptr);
        }

        // dense trunk
        Tensor<T> t = dense_forward(flat, dense120, Activation::ReLU, keep ? &c.dc120 : nullptr);
        if (keep) c.d1_out = t;
        t = batchnorm_forward(t, bn3, mode, keep ? &c.bc3 : nullptr);
        t = dropout_forward(t, config.drop_dense, mode, *drop_rng(rng), keep ? &c.masks.dense1 : nullptr,
                            frozen ? &frozen->dense1 : nullptr);
        t = dense_forward(t, dense84, Activation::ReLU, keep ? &c.dc84 : nullptr);
        if (keep) c.d2_out = t;
        t = batchnorm_forward(t, bn4, mode, keep ? &c.bc4 : nullptr);
        t = dropout_forward(t, config.drop_dense, mode, *drop_rng(rng), keep ? &c.masks.dense2 : nullptr,
                            frozen ? &frozen->dense2 : nullptr);

        Tensor<T> cls_in;
        if (variant == Variant::Embodied) {
            cls_in = Tensor<T>({b, std::size_t(100)});
            for (std::size_t r = 0; r < b; ++r) {
                for (std::size_t j = 0; j < 16; ++j) cls_in.at2(r, j) = out2->at2(r, j);
                for (std::size_t j = 0; j < 84; ++j) cls_in.at2(r, 16 + j) = t.at2(r, j);
            }
        } else {
            cls_in = std::move(t);
        }
        if (keep) c.cls_in = cls_in;
        Tensor<T> out1 = dense_forward(cls_in, classifier, Activation::Softmax, keep ? &c.dcCls : nullptr);
        return ForwardOut{std::move(out1), std::move(out2)};
    }

    // Gradients for parameters() given loss gradients w.r.t. the network
    // outputs (post-activation). dout2 must be present iff the variant has an
    // auxiliary head; pass a zero tensor to isolate the classification path.
    std::vector<Tensor<T>> backward(const Cache& c, const Tensor<T>& dout1,
                                    const Tensor<T>* dout2 = nullptr) {
        if (c.x.size() == 0) throw MissingForwardState("backward without cached train forward");
        if (has_aux() && !dout2) throw MissingForwardState("auxiliary head needs dout2");
        const std::size_t b = c.x.dim(0);

        DenseGrads<T> gCls = dense_backward(dout1, classifier, Activation::Softmax, c.dcCls);

        // split classifier input gradient
        Tensor<T> d_trunk; // gradient into the post-dropout 84-wide trunk
        Tensor<T> d_aux;   // gradient into the aux activations
        if (variant == Variant::Embodied) {
            d_aux = Tensor<T>({b, std::size_t(16)});
            d_trunk = Tensor<T>({b, std::size_t(84)});
            for (std::size_t r = 0; r < b; ++r) {
                for (std::size_t j = 0; j < 16; ++j) d_aux.at2(r, j) = gCls.dx.at2(r, j) + dout2->at2(r, j);
                for (std::size_t j = 0; j < 84; ++j) d_trunk.at2(r, j) = gCls.dx.at2(r, 16 + j);
            }
        } else {
            d_trunk = std::move(gCls.dx);
            if (has_aux()) d_aux = *dout2;
        }

        // trunk: dropout <- BN <- dense84 <- dropout <- BN <- dense120
        Tensor<T> g = dropout_backward(d_trunk, c.masks.dense2);
        BnGrads<T> gB4 = batchnorm_backward(g, bn4, c.bc4);
        DenseGrads<T> gD84 = dense_backward(gB4.dx, dense84, Activation::ReLU, c.dc84);
        g = dropout_backward(gD84.dx, c.masks.dense1);
        BnGrads<T> gB3 = batchnorm_backward(g, bn3, c.bc3);
        DenseGrads<T> gD120 = dense_backward(gB3.dx, dense120, Activation::ReLU, c.dc120);

        Tensor<T> d_flat = std::move(gD120.dx);
        DenseGrads<T> gAux;
        if (has_aux()) {
            const Activation act = variant == Variant::Embodied ? Activation::Sigmoid : Activation::Softmax;
            gAux = dense_backward(d_aux, aux, act, c.dcAux);
            for (std::size_t i = 0; i < d_flat.size(); ++i) d_flat[i] += gAux.dx[i];
        }

        // conv block 2
        Tensor<T> g4 = d_flat.reshaped({b, 7, 7, 16});
        g4 = dropout_backward(g4, c.masks.conv2);
        g4 = avgpool_same_backward(g4, 14, 14);
        BnGrads<T> gB2 = batchnorm_backward(g4.reshaped({b * 14 * 14, std::size_t(16)}), bn2, c.bc2);
        g4 = relu_backward_from_out(gB2.dx.reshaped({b, 14, 14, 16}), c.a2);
        ConvGrads<T> gC2 = conv2d_same_backward(g4, conv2, c.cc2);

        // conv block 1
        g4 = dropout_backward(gC2.dx, c.masks.conv1);
        g4 = avgpool_same_backward(g4, 28, 28);
        BnGrads<T> gB1 = batchnorm_backward(g4.reshaped({b * 28 * 28, std::size_t(6)}), bn1, c.bc1);
        g4 = relu_backward_from_out(gB1.dx.reshaped({b, 28, 28, 6}), c.a1);
        ConvGrads<T> gC1 = conv2d_same_backward(g4, conv1, c.cc1);

        std::vector<Tensor<T>> grads;
        grads.reserve(20);
        grads.push_back(std::move(gC1.dkernels));
        grads.push_back(std::move(gC1.dbias));
        grads.push_back(std::move(gB1.dgamma));
        grads.push_back(std::move(gB1.dbeta));
        grads.push_back(std::move(gC2.dkernels));
        grads.push_back(std::move(gC2.dbias));
        grads.push_back(std::move(gB2.dgamma));
        grads.push_back(std::move(gB2.dbeta));
        grads.push_back(std::move(gD120.dweights));
        grads.push_back(std::move(gD120.dbias));
        grads.push_back(std::move(gB3.dgamma));
        grads.push_back(std::move(gB3.dbeta));
        grads.push_back(std::move(gD84.dweights));
        grads.push_back(std::move(gD84.dbias));
        grads.push_back(std::move(gB4.dgamma));
        grads.push_back(std::move(gB4.dbeta));
        if (has_aux()) {
            grads.push_back(std::move(gAux.dweights));
            grads.push_back(std::move(gAux.dbias));
        }
        grads.push_back(std::move(gCls.dweights));
        grads.push_back(std::move(gCls.dbias));
        return grads;
    }

  private:
    static void relu_inplace(Tensor<T>& t) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] < T(0)) t[i] = T(0);
    }
    static Tensor<T> relu_backward_from_out(const Tensor<T>& dy, const Tensor<T>& out) {
        Tensor<T> dx(dy.shape());
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = out[i] > T(0) ? dy[i] : T(0);
        return dx;
    }
    // Dropout draws only happen in Train mode without frozen masks; a dummy
    // stream keeps the call sites simple when no draw can occur.
    RngStream* drop_rng(RngStream* rng) {
        if (rng) return rng;
        static thread_local RngStream dummy(0, "unused");
        return &dummy;
    }
};

// Builds one of the three variants. All layers draw from per-layer streams of
// (seed, tag), so variants built from the same seed share identical initial
// weights on every common layer.
template <typename T = double>
Network<T> build_model(const ModelSpec& spec, std::uint64_t seed,
                       const NetworkConfig& config = NetworkConfig{}) {
    if (spec.variant == Variant::Embodied && !spec.pretrained_link)
        throw MissingPretrainedLink("embodied variant requires a pre-trained link");
    Network<T> net;
    net.variant = spec.variant;
    net.config = config;
    net.init_seed = seed;

    const auto he = config.relu_init_gain;
    const auto g1 = config.aux_init_gain;

    net.conv1.kernels = Tensor<T>({3, 3, 1, 6});
    net.conv1.bias = Tensor<T>({6});
    {
        RngStream r(seed, "init/conv1");
        init_uniform(net.conv1.kernels, 9.0 * 1, 9.0 * 6, r, he);
    }
    net.conv2.kernels = Tensor<T>({3, 3, 6, 16});
    net.conv2.bias = Tensor<T>({16});
    {
        RngStream r(seed, "init/conv2");
        init_uniform(net.conv2.kernels, 9.0 * 6, 9.0 * 16, r, he);
    }
    net.bn1 = BatchNormParams<T>(6);
    net.bn2 = BatchNormParams<T>(16);
    net.bn3 = BatchNormParams<T>(120);
    net.bn4 = BatchNormParams<T>(84);
    for (BatchNormParams<T>* bn : {&net.bn1, &net.bn2, &net.bn3, &net.bn4}) {
        bn->momentum = T(config.bn_momentum);
        bn->epsilon = T(config.bn_epsilon);
    }

    net.dense120.weights = Tensor<T>({784, 120});
    net.dense120.bias = Tensor<T>({120});
    {
        RngStream r(seed, "init/dense120");
        init_uniform(net.dense120.weights, 784, 120, r, he);
    }
    net.dense84.weights = Tensor<T>({120, 84});
    net.dense84.bias = Tensor<T>({84});
    {
        RngStream r(seed, "init/dense84");
        init_uniform(net.dense84.weights, 120, 84, r, he);
    }

    if (spec.variant != Variant::Baseline) {
        const std::size_t units = spec.variant == Variant::Embodied ? 16 : 10;
        net.aux.weights = Tensor<T>({784, units});
        net.aux.bias = Tensor<T>({units});
        RngStream r(seed, "init/aux");
        init_uniform(net.aux.weights, 784, double(units), r, g1);
    }

    const std::size_t cin = net.classifier_in();
    net.classifier.weights = Tensor<T>({cin, 10});
    net.classifier.bias = Tensor<T>({10});
    {
        RngStream r(seed, "init/classifier");
        init_uniform(net.classifier.weights, double(cin), 10, r);
    }
    if (spec.variant == Variant::Embodied) {
        const PretrainedLink& link = *spec.pretrained_link;
        if (link.weights.dim(0) != 16 || link.weights.dim(1) != 10)
            throw ShapeMismatch("pretrained link must be (16,10)");
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 10; ++j) net.classifier.weights.at2(i, j) = T(link.weights.at2(i, j));
        for (std::size_t j = 0; j < 10; ++j) net.classifier.bias[j] = T(link.bias[j]);
    }
    return net;
}

template <typename T>
typename Network<T>::ForwardOut forward_model(Network<T>& net, const Tensor<T>& batch, Mode mode,
                                              RngStream* rng = nullptr) {
    return net.forward(batch, mode, rng);
}

} // namespace embodied
