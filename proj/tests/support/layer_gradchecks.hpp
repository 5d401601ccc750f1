#pragma once

// Per-layer finite-difference checks on random instances, shared by the unit
// tests and the acceptance suite. Each check builds a random small layer, a
// scalar probe loss L = <r, layer(x)> with fixed random r, runs the layer's
// backward pass for that loss, and compares every gradient entry against
// central differences in 64-bit. Returns the number of mismatching entries.

#include <functional>

#include "dcnn/layers.hpp"
#include "dcnn/rng.hpp"
#include "dcnn/train.hpp"
#include "gradcheck.hpp"

namespace gradsuite {

using dcnn::Conv2DSpec;
using dcnn::DenseSpec;
using dcnn::PoolSpec;
using dcnn::Rng;
using dcnn::Shape;
using dcnn::TensorD;

inline TensorD random_tensor_d(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(shape);
    for (auto& v : t.values()) v = lo + rng.uniform01() * (hi - lo);
    return t;
}

// distinct, well-separated values in random order; keeps max-pool windows
// tie-free and finite-difference steps away from argmax flips
inline TensorD separated_tensor_d(Shape shape, Rng& rng) {
    TensorD t(shape);
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const double shift = rng.uniform01() * 2 - 1;
    for (std::size_t i = 0; i < t.size(); ++i)
        t[order[i]] = shift + 0.013 * static_cast<double>(i);
    return t;
}

inline double probe(const TensorD& out, const TensorD& r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += out[i] * r[i];
    return sum;
}

inline int check_conv_instance(Rng& rng) {
    Conv2DSpec spec;
    spec.kernel = 1 + static_cast<int>(rng.below(3));
    spec.stride = 1 + static_cast<int>(rng.below(2));
    spec.pad = static_cast<int>(rng.below(2));
    spec.filters = 1 + static_cast<int>(rng.below(4));
    spec.in_channels = 1 + static_cast<int>(rng.below(3));
    if (rng.below(4) == 0) {
        spec.connectivity.assign(static_cast<std::size_t>(spec.filters) * spec.in_channels, 0);
        for (int of = 0; of < spec.filters; ++of) {
            spec.connectivity[static_cast<std::size_t>(of) * spec.in_channels +
                              rng.below(static_cast<std::size_t>(spec.in_channels))] = 1;
            for (int ic = 0; ic < spec.in_channels; ++ic)
                if (rng.below(2))
                    spec.connectivity[static_cast<std::size_t>(of) * spec.in_channels + ic] = 1;
        }
    }
    const int h = spec.kernel + static_cast<int>(rng.below(5));
    const int w = spec.kernel + static_cast<int>(rng.below(5));

    TensorD input = random_tensor_d(Shape{static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                                          static_cast<std::size_t>(spec.in_channels)},
                                    rng);
    auto params = dcnn::init_conv_params<double>(spec, rng);
    for (auto& b : params.biases.values()) b = rng.uniform01() - 0.5;

    const Shape out_shape = dcnn::conv_output_shape(h, w, spec.in_channels, spec.kernel, spec.pad,
                                                    spec.stride, spec.filters);
    const TensorD r = random_tensor_d(out_shape, rng);

    const auto loss = [&]() { return probe(dcnn::conv_forward(input, spec, params), r); };
    const auto grads = dcnn::conv_backward(r, input, spec, params);

    int bad = 0;
    bad += gradcheck::check_tensor(input, grads.input, loss);
    bad += gradcheck::check_tensor(params.weights, grads.weights, loss);
    bad += gradcheck::check_tensor(params.biases, grads.biases, loss);
    return bad;
}

inline int check_dense_instance(Rng& rng) {
    DenseSpec spec;
    spec.in_features = 1 + static_cast<int>(rng.below(20));
    spec.out_features = 1 + static_cast<int>(rng.below(10));
    TensorD input = random_tensor_d(Shape{static_cast<std::size_t>(spec.in_features)}, rng);
    auto params = dcnn::init_dense_params<double>(spec, rng);
    for (auto& b : params.biases.values()) b = rng.uniform01() - 0.5;
    const TensorD r = random_tensor_d(Shape{static_cast<std::size_t>(spec.out_features)}, rng);

    const auto loss = [&]() { return probe(dcnn::dense_forward(input, spec, params), r); };
    const auto grads = dcnn::dense_backward(r, input, spec, params);

    int bad = 0;
    bad += gradcheck::check_tensor(input, grads.input, loss);
    bad += gradcheck::check_tensor(params.weights, grads.weights, loss);
    bad += gradcheck::check_tensor(params.biases, grads.biases, loss);
    return bad;
}

// inputs bounded away from the kink at 0 (|x| > 1e-3)
inline int check_relu_instance(Rng& rng) {
    TensorD input = random_tensor_d(Shape{2 + rng.below(6), 2 + rng.below(6)}, rng);
    for (auto& v : input.values())
        if (std::abs(v) <= 1e-3) v += (v >= 0 ? 2e-3 : -2e-3);
    const TensorD r = random_tensor_d(input.shape(), rng);

    const auto loss = [&]() { return probe(dcnn::relu_forward(input), r); };
    const TensorD analytic = dcnn::relu_backward(r, input);
    return gradcheck::check_tensor(input, analytic, loss);
}

inline int check_maxpool_instance(Rng& rng, bool affine) {
    PoolSpec spec;
    spec.extent = 1 + static_cast<int>(rng.below(3));
    spec.stride = 1 + static_cast<int>(rng.below(3));
    spec.trainable_affine = affine;
    const int c = 1 + static_cast<int>(rng.below(3));
    const int h = spec.extent + static_cast<int>(rng.below(5));
    const int w = spec.extent + static_cast<int>(rng.below(5));

    TensorD input = separated_tensor_d(Shape{static_cast<std::size_t>(h),
                                             static_cast<std::size_t>(w),
                                             static_cast<std::size_t>(c)},
                                       rng);
    auto params = dcnn::init_pool_params<double>(spec, c);
    if (affine) {
        for (auto& v : params.weights.values()) v = 0.5 + rng.uniform01();
        for (auto& v : params.biases.values()) v = rng.uniform01() - 0.5;
    }

    const auto fwd = dcnn::maxpool_forward(input, spec, affine ? &params : nullptr);
    const TensorD r = random_tensor_d(fwd.output.shape(), rng);

    const auto loss = [&]() {
        return probe(dcnn::maxpool_forward(input, spec, affine ? &params : nullptr).output, r);
    };
    const auto grads = dcnn::maxpool_backward(r, fwd.argmax, input, spec, affine ? &params : nullptr);

    int bad = gradcheck::check_tensor(input, grads.input, loss);
    if (affine) {
        bad += gradcheck::check_tensor(params.weights, grads.coeff, loss);
        bad += gradcheck::check_tensor(params.biases, grads.bias, loss);
    }
    return bad;
}

inline int check_softmax_instance(Rng& rng) {
    TensorD logits = random_tensor_d(Shape{2 + rng.below(10)}, rng, -4.0, 4.0);
    const TensorD r = random_tensor_d(logits.shape(), rng);

    const auto loss = [&]() { return probe(dcnn::softmax(logits), r); };
    const TensorD probs = dcnn::softmax(logits);
    const TensorD analytic = dcnn::softmax_backward(r, probs);
    return gradcheck::check_tensor(logits, analytic, loss);
}

// combined softmax + cross-entropy: dL/dlogits must equal probs - one_hot
inline int check_softmax_ce_instance(Rng& rng) {
    TensorD logits = random_tensor_d(Shape{2 + rng.below(10)}, rng, -4.0, 4.0);
    const int true_class = static_cast<int>(rng.below(logits.size()));

    const auto loss = [&]() {
        return dcnn::cross_entropy_loss(dcnn::softmax(logits), true_class);
    };
    const TensorD probs = dcnn::softmax(logits);
    const TensorD analytic =
        dcnn::softmax_backward(dcnn::cross_entropy_grad(probs, true_class), probs);

    int bad = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double closed_form =
            probs[i] - (static_cast<int>(i) == true_class ? 1.0 : 0.0);
        if (!gradcheck::close(analytic[i], closed_form, 1e-9, 1e-12)) ++bad;
    }
    bad += gradcheck::check_tensor(logits, analytic, loss);
    return bad;
}

}  // namespace gradsuite
