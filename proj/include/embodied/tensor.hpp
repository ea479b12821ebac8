#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"

namespace embodied {

// Dense row-major N-dimensional array. Shapes are small (rank <= 4 here), so a
// plain vector<size_t> shape plus a flat buffer is all the machinery needed.
template <typename T = double>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count_of(shape_), T(0)) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count_of(shape_))
            throw ShapeMismatch("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape volume " + std::to_string(count_of(shape_)));
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    T& at4(std::size_t n, std::size_t h, std::size_t w, std::size_t c) {
        return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
    }
    const T& at4(std::size_t n, std::size_t h, std::size_t w, std::size_t c) const {
        return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
    }

    // Same buffer, new shape; volume must be preserved.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (count_of(shape) != data_.size())
            throw ShapeMismatch("reshape volume mismatch");
        return Tensor(std::move(shape), data_);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::size_t count_of(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t(1), std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

// c[i,j] = sum_t a[i,t] * b[t,j]; fixed i-t-j loop order gives a deterministic
// reduction order and decent cache behavior for these sizes.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeMismatch("matmul inner dimensions");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> c({m, n});
    const T* pa = a.data();
    const T* pb = b.data();
    T* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
            const T av = pa[i * k + t];
            if (av == T(0)) continue;
            const T* brow = pb + t * n;
            T* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// c = a * b^T without materializing the transpose.
template <typename T>
Tensor<T> matmul_bt(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw ShapeMismatch("matmul_bt inner dimensions");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Tensor<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = b.data() + j * k;
            T s = 0;
            for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
            c.at2(i, j) = s;
        }
    }
    return c;
}

// c = a^T * b.
template <typename T>
Tensor<T> matmul_at(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
        throw ShapeMismatch("matmul_at inner dimensions");
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    Tensor<T> c({m, n});
    for (std::size_t t = 0; t < k; ++t) {
        const T* arow = a.data() + t * m;
        const T* brow = b.data() + t * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = arow[i];
            if (av == T(0)) continue;
            T* crow = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

} // namespace embodied
