#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcnn/errors.hpp"

namespace dcnn {

// Dense shape, rank 1..4, row-major with the last dimension varying fastest.
// Convention: images and activations are height x width x channels; a batch
// dimension, when present, comes first.
class Shape {
  public:
    Shape() = default;

    Shape(std::initializer_list<std::size_t> dims) {
        init(std::span<const std::size_t>(dims.begin(), dims.size()));
    }

    explicit Shape(std::span<const std::size_t> dims) { init(dims); }

    std::size_t rank() const { return rank_; }

    std::size_t dim(std::size_t i) const {
        if (i >= rank_) throw ShapeError("shape: dimension index " + std::to_string(i) +
                                         " out of range for rank " + std::to_string(rank_));
        return dims_[i];
    }

    // Total element count (product of dims); 0 for the default-constructed shape.
    std::size_t count() const {
        if (rank_ == 0) return 0;
        std::size_t n = 1;
        for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
        return n;
    }

    bool operator==(const Shape& other) const {
        if (rank_ != other.rank_) return false;
        for (std::size_t i = 0; i < rank_; ++i)
            if (dims_[i] != other.dims_[i]) return false;
        return true;
    }
    bool operator!=(const Shape& other) const { return !(*this == other); }

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < rank_; ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[i]);
        }
        s += ")";
        return s;
    }

  private:
    void init(std::span<const std::size_t> dims) {
        if (dims.empty() || dims.size() > 4)
            throw ShapeError("shape: rank must be 1..4, got " + std::to_string(dims.size()));
        std::size_t n = 1;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (dims[i] == 0) throw ShapeError("shape: dimension " + std::to_string(i) + " is zero");
            if (dims[i] > std::numeric_limits<std::size_t>::max() / n)
                throw ShapeError("shape: element count overflows the index type");
            n *= dims[i];
            dims_[i] = dims[i];
        }
        rank_ = dims.size();
    }

    std::array<std::size_t, 4> dims_{};
    std::size_t rank_ = 0;
};

// Dense row-major tensor. Weights and activations use the 32-bit
// instantiation; the 64-bit one exists for gradient checking, where
// finite-difference tolerances are tight.
template <typename T>
class TensorT {
  public:
    using value_type = T;

    TensorT() = default;

    explicit TensorT(Shape shape, T fill = T{})
        : shape_(shape), data_(shape.count(), fill) {}

    TensorT(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.count())
            throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.to_string());
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // Rank-aware accessors; flat index of (i,j,k) under shape (a,b,c) is (i*b + j)*c + k.
    T& at(std::size_t i) { return data_[i]; }
    const T& at(std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) { return data_[i * shape_.dim(1) + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_.dim(1) + j]; }

    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_.dim(1) + j) * shape_.dim(2) + k];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_.dim(1) + j) * shape_.dim(2) + k];
    }

    T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_.dim(1) + j) * shape_.dim(2) + k) * shape_.dim(3) + l];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_.dim(1) + j) * shape_.dim(2) + k) * shape_.dim(3) + l];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    // Same data under a different shape; element counts must match.
    TensorT reshaped(Shape new_shape) const {
        if (new_shape.count() != data_.size())
            throw ShapeError("reshape: element count " + std::to_string(data_.size()) +
                             " does not fit shape " + new_shape.to_string());
        return TensorT(new_shape, data_);
    }

    bool operator==(const TensorT& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

  private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Standard matrix product of a (m x k) and b (k x n). No broadcasting;
// mismatched inner dimensions are a hard error.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2)
        throw ShapeError("matmul: operands must be rank 2, got " + a.shape().to_string() +
                         " and " + b.shape().to_string());
    const std::size_t m = a.shape().dim(0);
    const std::size_t k = a.shape().dim(1);
    const std::size_t n = b.shape().dim(1);
    if (b.shape().dim(0) != k)
        throw ShapeError("matmul: inner dimensions differ, " + a.shape().to_string() + " vs " +
                         b.shape().to_string());

    TensorT<T> out(Shape{m, n});
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
#pragma omp parallel for schedule(static) if (m * n * k > 16384)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc{};
            for (std::size_t t = 0; t < k; ++t) acc += pa[i * k + t] * pb[t * n + j];
            po[i * n + j] = acc;
        }
    }
    return out;
}

// Elementwise map; shape is preserved exactly.
template <typename T, typename F>
TensorT<T> map_elementwise(const TensorT<T>& t, F f) {
    TensorT<T> out(t.shape());
    const T* src = t.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < t.size(); ++i) dst[i] = f(src[i]);
    return out;
}

}  // namespace dcnn
