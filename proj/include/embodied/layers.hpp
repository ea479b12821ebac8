#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace embodied {

enum class Mode { Train, Eval };
enum class Activation { None, ReLU, Sigmoid, Softmax };

// ---------------------------------------------------------------- convolution

template <typename T>
struct ConvParams {
    Tensor<T> kernels; // (3,3,c_in,c_out)
    Tensor<T> bias;    // (c_out)

    std::size_t param_count() const { return kernels.size() + bias.size(); }
};

// Zero-padded "same" cross-correlation for 3x3 kernels via patch expansion:
// cols is (batch*h*w, 9*c_in) and the kernel tensor is already laid out as a
// (9*c_in, c_out) matrix in row-major order.
template <typename T>
Tensor<T> im2col3(const Tensor<T>& x) {
    const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    Tensor<T> cols({b * h * w, 9 * c});
    T* out = cols.data();
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const std::ptrdiff_t si = std::ptrdiff_t(i) + di;
                        const std::ptrdiff_t sj = std::ptrdiff_t(j) + dj;
                        if (si >= 0 && si < std::ptrdiff_t(h) && sj >= 0 && sj < std::ptrdiff_t(w)) {
                            const T* src = &x.at4(n, std::size_t(si), std::size_t(sj), 0);
                            for (std::size_t ch = 0; ch < c; ++ch) *out++ = src[ch];
                        } else {
                            for (std::size_t ch = 0; ch < c; ++ch) *out++ = T(0);
                        }
                    }
            }
    return cols;
}

template <typename T>
Tensor<T> col2im3(const Tensor<T>& cols, std::size_t b, std::size_t h, std::size_t w, std::size_t c) {
    Tensor<T> x({b, h, w, c});
    const T* in = cols.data();
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const std::ptrdiff_t si = std::ptrdiff_t(i) + di;
                        const std::ptrdiff_t sj = std::ptrdiff_t(j) + dj;
                        if (si >= 0 && si < std::ptrdiff_t(h) && sj >= 0 && sj < std::ptrdiff_t(w)) {
                            T* dst = &x.at4(n, std::size_t(si), std::size_t(sj), 0);
                            for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += in[ch];
                        }
                        in += c;
                    }
            }
    return x;
}

template <typename T>
struct ConvCache {
    Tensor<T> cols;
    std::size_t batch = 0, h = 0, w = 0, c_in = 0;
};

template <typename T>
Tensor<T> conv2d_same_forward(const Tensor<T>& x, const ConvParams<T>& p, ConvCache<T>* cache = nullptr) {
    if (x.rank() != 4 || p.kernels.rank() != 4 || x.dim(3) != p.kernels.dim(2))
        throw ShapeMismatch("conv2d input/kernel channels");
    if (p.kernels.dim(0) != 3 || p.kernels.dim(1) != 3)
        throw ShapeMismatch("conv2d expects 3x3 kernels");
    const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t c_out = p.kernels.dim(3);
    Tensor<T> cols = im2col3(x);
    Tensor<T> kmat = p.kernels.reshaped({9 * x.dim(3), c_out});
    Tensor<T> flat = matmul(cols, kmat);
    for (std::size_t r = 0; r < flat.dim(0); ++r)
        for (std::size_t o = 0; o < c_out; ++o) flat.at2(r, o) += p.bias[o];
    if (cache) *cache = ConvCache<T>{std::move(cols), b, h, w, x.dim(3)};
    return flat.reshaped({b, h, w, c_out});
}

template <typename T>
struct ConvGrads {
    Tensor<T> dx, dkernels, dbias;
};

template <typename T>
ConvGrads<T> conv2d_same_backward(const Tensor<T>& dy, const ConvParams<T>& p, const ConvCache<T>& cache) {
    const std::size_t c_out = p.kernels.dim(3);
    Tensor<T> dy_mat = dy.reshaped({cache.batch * cache.h * cache.w, c_out});
    ConvGrads<T> g;
    g.dbias = Tensor<T>({c_out});
    for (std::size_t r = 0; r < dy_mat.dim(0); ++r)
        for (std::size_t o = 0; o < c_out; ++o) g.dbias[o] += dy_mat.at2(r, o);
    g.dkernels = matmul_at(cache.cols, dy_mat).reshaped({std::size_t(3), std::size_t(3), cache.c_in, c_out});
    Tensor<T> kmat = p.kernels.reshaped({9 * cache.c_in, c_out});
    Tensor<T> dcols = matmul_bt(dy_mat, kmat);
    g.dx = col2im3(dcols, cache.batch, cache.h, cache.w, cache.c_in);
    return g;
}

// ------------------------------------------------------------ average pooling

// 3x3 window, stride 2, "same": output is ceil(in/2); padded cells are
// excluded from both the sum and the divisor, so constants pool to themselves.
template <typename T>
Tensor<T> avgpool_same_forward(const Tensor<T>& x) {
    const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
    const std::ptrdiff_t pad_h = (std::ptrdiff_t(oh) - 1) * 2 + 3 > std::ptrdiff_t(h)
                                     ? ((std::ptrdiff_t(oh) - 1) * 2 + 3 - std::ptrdiff_t(h)) / 2
                                     : 0;
    const std::ptrdiff_t pad_w = (std::ptrdiff_t(ow) - 1) * 2 + 3 > std::ptrdiff_t(w)
                                     ? ((std::ptrdiff_t(ow) - 1) * 2 + 3 - std::ptrdiff_t(w)) / 2
                                     : 0;
    Tensor<T> out({b, oh, ow, c});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                const std::ptrdiff_t i0 = std::ptrdiff_t(i) * 2 - pad_h;
                const std::ptrdiff_t j0 = std::ptrdiff_t(j) * 2 - pad_w;
                std::size_t cnt = 0;
                for (std::ptrdiff_t di = 0; di < 3; ++di)
                    for (std::ptrdiff_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t si = i0 + di, sj = j0 + dj;
                        if (si < 0 || si >= std::ptrdiff_t(h) || sj < 0 || sj >= std::ptrdiff_t(w)) continue;
                        ++cnt;
                        const T* src = &x.at4(n, std::size_t(si), std::size_t(sj), 0);
                        T* dst = &out.at4(n, i, j, 0);
                        for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                    }
                T* dst = &out.at4(n, i, j, 0);
                for (std::size_t ch = 0; ch < c; ++ch) dst[ch] /= T(cnt);
            }
    return out;
}

template <typename T>
Tensor<T> avgpool_same_backward(const Tensor<T>& dy, std::size_t h, std::size_t w) {
    const std::size_t b = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2), c = dy.dim(3);
    const std::ptrdiff_t pad_h = (std::ptrdiff_t(oh) - 1) * 2 + 3 > std::ptrdiff_t(h)
                                     ? ((std::ptrdiff_t(oh) - 1) * 2 + 3 - std::ptrdiff_t(h)) / 2
                                     : 0;
    const std::ptrdiff_t pad_w = (std::ptrdiff_t(ow) - 1) * 2 + 3 > std::ptrdiff_t(w)
                                     ? ((std::ptrdiff_t(ow) - 1) * 2 + 3 - std::ptrdiff_t(w)) / 2
                                     : 0;
    Tensor<T> dx({b, h, w, c});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                const std::ptrdiff_t i0 = std::ptrdiff_t(i) * 2 - pad_h;
                const std::ptrdiff_t j0 = std::ptrdiff_t(j) * 2 - pad_w;
                std::size_t cnt = 0;
                for (std::ptrdiff_t di = 0; di < 3; ++di)
                    for (std::ptrdiff_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t si = i0 + di, sj = j0 + dj;
                        if (si >= 0 && si < std::ptrdiff_t(h) && sj >= 0 && sj < std::ptrdiff_t(w)) ++cnt;
                    }
                const T* src = &dy.at4(n, i, j, 0);
                for (std::ptrdiff_t di = 0; di < 3; ++di)
                    for (std::ptrdiff_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t si = i0 + di, sj = j0 + dj;
                        if (si < 0 || si >= std::ptrdiff_t(h) || sj < 0 || sj >= std::ptrdiff_t(w)) continue;
                        T* dst = &dx.at4(n, std::size_t(si), std::size_t(sj), 0);
                        for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch] / T(cnt);
                    }
            }
    return dx;
}

// --------------------------------------------------------- batch normalization

template <typename T>
struct BatchNormParams {
    Tensor<T> gamma, beta, running_mean, running_var; // each (c)
    T momentum = T(0.75);
    T epsilon = T(3e-3);

    explicit BatchNormParams(std::size_t c = 0)
        : gamma(Tensor<T>::full({c}, T(1))),
          beta(Tensor<T>({c})),
          running_mean(Tensor<T>({c})),
          running_var(Tensor<T>::full({c}, T(1))) {}

    std::size_t channels() const { return gamma.size(); }
    // The reported parameter count includes gamma, beta and both running statistics.
    std::size_t param_count() const { return 4 * channels(); }
};

template <typename T>
struct BnCache {
    Tensor<T> x;    // (rows, c) view of the input
    Tensor<T> xhat; // normalized input
    std::vector<T> mu, var;
};

// Operates on a 2-D (rows, channels) view; conv tensors (b,h,w,c) are passed
// as (b*h*w, c), which their row-major layout already is.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x2d, BatchNormParams<T>& p, Mode mode,
                            BnCache<T>* cache = nullptr) {
    const std::size_t rows = x2d.dim(0), c = x2d.dim(1);
    if (c != p.channels()) throw ShapeMismatch("batchnorm channels");
    Tensor<T> y({rows, c});
    if (mode == Mode::Train) {
        if (rows == 0) throw ShapeMismatch("batchnorm on empty batch");
        std::vector<T> mu(c, T(0)), var(c, T(0));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t ch = 0; ch < c; ++ch) mu[ch] += x2d.at2(r, ch);
        for (std::size_t ch = 0; ch < c; ++ch) mu[ch] /= T(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const T d = x2d.at2(r, ch) - mu[ch];
                var[ch] += d * d;
            }
        for (std::size_t ch = 0; ch < c; ++ch) var[ch] /= T(rows); // biased batch variance
        for (std::size_t ch = 0; ch < c; ++ch) {
            p.running_mean[ch] = p.momentum * p.running_mean[ch] + (T(1) - p.momentum) * mu[ch];
            p.running_var[ch] = p.momentum * p.running_var[ch] + (T(1) - p.momentum) * var[ch];
        }
        Tensor<T> xhat({rows, c});
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T ivar = T(1) / std::sqrt(var[ch] + p.epsilon);
            for (std::size_t r = 0; r < rows; ++r) {
                const T xh = (x2d.at2(r, ch) - mu[ch]) * ivar;
                xhat.at2(r, ch) = xh;
                y.at2(r, ch) = p.gamma[ch] * xh + p.beta[ch];
            }
        }
        if (cache) *cache = BnCache<T>{x2d, std::move(xhat), std::move(mu), std::move(var)};
    } else {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T ivar = T(1) / std::sqrt(p.running_var[ch] + p.epsilon);
            for (std::size_t r = 0; r < rows; ++r)
                y.at2(r, ch) = p.gamma[ch] * (x2d.at2(r, ch) - p.running_mean[ch]) * ivar + p.beta[ch];
        }
    }
    return y;
}

template <typename T>
struct BnGrads {
    Tensor<T> dx, dgamma, dbeta;
};

// Differentiates through the batch statistics (mu and var are functions of x).
template <typename T>
BnGrads<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormParams<T>& p, const BnCache<T>& cache) {
    const std::size_t rows = dy.dim(0), c = dy.dim(1);
    if (cache.x.size() == 0) throw MissingForwardState("batchnorm backward without train forward");
    BnGrads<T> g;
    g.dx = Tensor<T>({rows, c});
    g.dgamma = Tensor<T>({c});
    g.dbeta = Tensor<T>({c});
    const T m = T(rows);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const T ivar = T(1) / std::sqrt(cache.var[ch] + p.epsilon);
        T dg = 0, db = 0, dvar = 0, dmu_a = 0, sum_xc = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            const T gy = dy.at2(r, ch);
            dg += gy * cache.xhat.at2(r, ch);
            db += gy;
            const T xc = cache.x.at2(r, ch) - cache.mu[ch];
            dvar += gy * p.gamma[ch] * xc;
            dmu_a += gy * p.gamma[ch];
            sum_xc += xc;
        }
        dvar *= T(-0.5) * ivar * ivar * ivar;
        const T dmu = -dmu_a * ivar + dvar * (T(-2) / m) * sum_xc;
        for (std::size_t r = 0; r < rows; ++r) {
            const T xc = cache.x.at2(r, ch) - cache.mu[ch];
            g.dx.at2(r, ch) = dy.at2(r, ch) * p.gamma[ch] * ivar + dvar * T(2) * xc / m + dmu / m;
        }
        g.dgamma[ch] = dg;
        g.dbeta[ch] = db;
    }
    return g;
}

// ---------------------------------------------------------------------dropout

// Inverted dropout: the returned mask holds the scale 1/(1-rate) for survivors
// and 0 for dropped cells, so backward is an elementwise product. Passing a
// frozen mask reproduces a previous draw (used by the gradient checker).
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, RngStream& rng,
                          Tensor<T>* mask_out = nullptr, const Tensor<T>* frozen_mask = nullptr) {
    if (mode == Mode::Eval || rate == 0.0) {
        if (mask_out) *mask_out = Tensor<T>();
        return x;
    }
    Tensor<T> mask;
    if (frozen_mask) {
        mask = *frozen_mask;
    } else {
        mask = Tensor<T>(x.shape());
        const T keep_scale = T(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < mask.size(); ++i)
            mask[i] = rng.canonical() >= rate ? keep_scale : T(0);
    }
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * mask[i];
    if (mask_out) *mask_out = std::move(mask);
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const Tensor<T>& mask) {
    if (mask.size() == 0) return dy; // eval / rate 0: identity
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * mask[i];
    return dx;
}

// ----------------------------------------------------------------------- dense

template <typename T>
struct DenseParams {
    Tensor<T> weights; // (in, out)
    Tensor<T> bias;    // (out)

    std::size_t param_count() const { return weights.size() + bias.size(); }
};

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& z) {
    Tensor<T> p(z.shape());
    const std::size_t rows = z.dim(0), n = z.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        T mx = z.at2(r, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, z.at2(r, j));
        T sum = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const T e = std::exp(z.at2(r, j) - mx);
            p.at2(r, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < n; ++j) p.at2(r, j) /= sum;
    }
    return p;
}

template <typename T>
struct DenseCache {
    Tensor<T> x;   // input
    Tensor<T> out; // post-activation output
};

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const DenseParams<T>& p, Activation act,
                        DenseCache<T>* cache = nullptr) {
    if (x.rank() != 2 || x.dim(1) != p.weights.dim(0)) throw ShapeMismatch("dense input width");
    Tensor<T> z = matmul(x, p.weights);
    const std::size_t rows = z.dim(0), n = z.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) z.at2(r, j) += p.bias[j];
    Tensor<T> y;
    switch (act) {
        case Activation::None: y = std::move(z); break;
        case Activation::ReLU:
            y = std::move(z);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] > T(0) ? y[i] : T(0);
            break;
        case Activation::Sigmoid:
            y = std::move(z);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-y[i]));
            break;
        case Activation::Softmax: y = softmax_rows(z); break;
    }
    if (cache) *cache = DenseCache<T>{x, y};
    return y;
}

template <typename T>
struct DenseGrads {
    Tensor<T> dx, dweights, dbias;
};

// dy is the gradient w.r.t. the post-activation output.
template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& dy, const DenseParams<T>& p, Activation act,
                             const DenseCache<T>& cache) {
    if (cache.x.size() == 0) throw MissingForwardState("dense backward without cached forward");
    const std::size_t rows = dy.dim(0), n = dy.dim(1);
    Tensor<T> dz({rows, n});
    switch (act) {
        case Activation::None: dz = dy; break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < dz.size(); ++i)
                dz[i] = cache.out[i] > T(0) ? dy[i] : T(0);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < dz.size(); ++i)
                dz[i] = dy[i] * cache.out[i] * (T(1) - cache.out[i]);
            break;
        case Activation::Softmax:
            // row-wise Jacobian product: dz = p * (dy - <dy,p>)
            for (std::size_t r = 0; r < rows; ++r) {
                T dot = 0;
                for (std::size_t j = 0; j < n; ++j) dot += dy.at2(r, j) * cache.out.at2(r, j);
                for (std::size_t j = 0; j < n; ++j)
                    dz.at2(r, j) = cache.out.at2(r, j) * (dy.at2(r, j) - dot);
            }
            break;
    }
    DenseGrads<T> g;
    g.dweights = matmul_at(cache.x, dz);
    g.dbias = Tensor<T>({n});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) g.dbias[j] += dz.at2(r, j);
    g.dx = matmul_bt(dz, p.weights);
    return g;
}

// ------------------------------------------------------------- initialization

enum class InitScheme { Glorot, HeReLU };

// Fan-based uniform limits: Glorot sqrt(6/(fin+fout)); He multiplies by sqrt(2)
// for ReLU-activated layers. Conv fans count the 3x3 receptive field.
template <typename T>
void init_uniform(Tensor<T>& w, double fan_in, double fan_out, RngStream& rng, double gain = 1.0) {
    const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = T(rng.uniform(limit));
}

} // namespace embodied
