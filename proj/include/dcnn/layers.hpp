#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dcnn/kernels_omp.hpp"
#include "dcnn/kernels_serial.hpp"
#include "dcnn/rng.hpp"
#include "dcnn/runtime.hpp"
#include "dcnn/tensor.hpp"

// Layer forward/backward passes. Every op is a pure function of
// (input, params): shape validation happens here, the arithmetic lives in
// the kernel headers, and the runtime mode picks the serial reference or
// the OpenMP implementation.

namespace dcnn {

namespace detail {

template <typename T>
void check_conv_args(const TensorT<T>& input, const Conv2DSpec& spec,
                     const LayerParamsT<T>& params) {
    spec.validate();
    if (input.shape().rank() != 3)
        throw ShapeError("conv: input must be rank 3 (h,w,c), got " + input.shape().to_string());
    if (input.shape().dim(2) != static_cast<std::size_t>(spec.in_channels))
        throw ShapeError("conv: input has " + std::to_string(input.shape().dim(2)) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    const Shape want{static_cast<std::size_t>(spec.filters), static_cast<std::size_t>(spec.kernel),
                     static_cast<std::size_t>(spec.kernel), static_cast<std::size_t>(spec.in_channels)};
    if (params.weights.shape() != want)
        throw ShapeError("conv: weights shape " + params.weights.shape().to_string() +
                         ", expected " + want.to_string());
    if (params.biases.shape() != Shape{static_cast<std::size_t>(spec.filters)})
        throw ShapeError("conv: biases shape " + params.biases.shape().to_string() + ", expected (" +
                         std::to_string(spec.filters) + ")");
}

template <typename T>
void check_pool_args(const TensorT<T>& input, const PoolSpec& spec, const LayerParamsT<T>* params) {
    spec.validate();
    if (input.shape().rank() != 3)
        throw ShapeError("maxpool: input must be rank 3 (h,w,c), got " + input.shape().to_string());
    if (spec.trainable_affine) {
        const Shape want{input.shape().dim(2)};
        if (!params || params->weights.shape() != want || params->biases.shape() != want)
            throw ShapeError("maxpool: affine coefficients must be per-channel, shape " +
                             want.to_string());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> conv_forward(const TensorT<T>& input, const Conv2DSpec& spec,
                        const LayerParamsT<T>& params) {
    detail::check_conv_args(input, spec, params);
    const int h = static_cast<int>(input.shape().dim(0));
    const int w = static_cast<int>(input.shape().dim(1));
    const Shape out_shape =
        conv_output_shape(h, w, spec.in_channels, spec.kernel, spec.pad, spec.stride, spec.filters);
    TensorT<T> out(out_shape);
    const int h2 = static_cast<int>(out_shape.dim(0));
    const int w2 = static_cast<int>(out_shape.dim(1));
    if (runtime::parallel_kernels())
        kernels::par::conv_forward(input.data(), h, w, spec.in_channels, params.weights.data(),
                                   params.biases.data(), spec, out.data(), h2, w2);
    else
        kernels::serial::conv_forward(input.data(), h, w, spec.in_channels, params.weights.data(),
                                      params.biases.data(), spec, out.data(), h2, w2);
    return out;
}

template <typename T>
struct ConvGradsT {
    TensorT<T> input;
    TensorT<T> weights;
    TensorT<T> biases;
};

// Writes into caller-owned, correctly shaped gradient tensors; the training
// loop reuses its per-example buffers this way instead of reallocating.
// Weight-gradient entries of masked-out channels are left untouched (the
// buffers start zeroed and nothing ever writes them).
template <typename T>
void conv_backward_into(const TensorT<T>& grad_out, const TensorT<T>& input,
                        const Conv2DSpec& spec, const LayerParamsT<T>& params,
                        TensorT<T>& grad_input, TensorT<T>& grad_weights,
                        TensorT<T>& grad_biases) {
    detail::check_conv_args(input, spec, params);
    const int h = static_cast<int>(input.shape().dim(0));
    const int w = static_cast<int>(input.shape().dim(1));
    const Shape out_shape =
        conv_output_shape(h, w, spec.in_channels, spec.kernel, spec.pad, spec.stride, spec.filters);
    if (grad_out.shape() != out_shape)
        throw ShapeError("conv backward: grad shape " + grad_out.shape().to_string() +
                         ", expected " + out_shape.to_string());
    if (grad_input.shape() != input.shape() || grad_weights.shape() != params.weights.shape() ||
        grad_biases.shape() != params.biases.shape())
        throw ShapeError("conv backward: gradient buffers do not match layer shapes");
    const int h2 = static_cast<int>(out_shape.dim(0));
    const int w2 = static_cast<int>(out_shape.dim(1));
    const int c = spec.in_channels;
    if (runtime::parallel_kernels()) {
        kernels::par::conv_backward_bias(grad_out.data(), h2, w2, spec.filters, grad_biases.data());
        kernels::par::conv_backward_weights(grad_out.data(), input.data(), h, w, c, spec,
                                            grad_weights.data(), h2, w2);
        kernels::par::conv_backward_input(grad_out.data(), params.weights.data(), h, w, c, spec,
                                          grad_input.data(), h2, w2);
    } else {
        kernels::serial::conv_backward_bias(grad_out.data(), h2, w2, spec.filters,
                                            grad_biases.data());
        kernels::serial::conv_backward_weights(grad_out.data(), input.data(), h, w, c, spec,
                                               grad_weights.data(), h2, w2);
        kernels::serial::conv_backward_input(grad_out.data(), params.weights.data(), h, w, c, spec,
                                             grad_input.data(), h2, w2);
    }
}

template <typename T>
ConvGradsT<T> conv_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                            const Conv2DSpec& spec, const LayerParamsT<T>& params) {
    ConvGradsT<T> grads{TensorT<T>(input.shape()), TensorT<T>(params.weights.shape()),
                        TensorT<T>(params.biases.shape())};
    conv_backward_into(grad_out, input, spec, params, grads.input, grads.weights, grads.biases);
    return grads;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

// small workloads skip the OpenMP kernels outright: a team spawn costs more
// than the loop body at these sizes
namespace detail {
inline constexpr std::size_t kEltwiseParCutoff = 16384;  // relu and friends
inline constexpr long kPoolParCutoff = 4096;             // pooled output elements
inline constexpr long kDenseParCutoff = 65536;           // in*out products
}  // namespace detail

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input) {
    TensorT<T> out(input.shape());
    if (runtime::parallel_kernels() && input.size() > detail::kEltwiseParCutoff)
        kernels::par::relu_forward(input.data(), input.size(), out.data());
    else
        kernels::serial::relu_forward(input.data(), input.size(), out.data());
    return out;
}

// Gradient passes where the cached input is strictly positive.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& input) {
    if (grad_out.shape() != input.shape())
        throw ShapeError("relu backward: grad shape " + grad_out.shape().to_string() +
                         " does not match input " + input.shape().to_string());
    TensorT<T> gin(input.shape());
    if (runtime::parallel_kernels() && input.size() > detail::kEltwiseParCutoff)
        kernels::par::relu_backward(grad_out.data(), input.data(), input.size(), gin.data());
    else
        kernels::serial::relu_backward(grad_out.data(), input.data(), input.size(), gin.data());
    return gin;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

template <typename T>
struct PoolResultT {
    TensorT<T> output;
    std::vector<std::int32_t> argmax;  // flat input index per output element
};

template <typename T>
PoolResultT<T> maxpool_forward(const TensorT<T>& input, const PoolSpec& spec,
                               const LayerParamsT<T>* params = nullptr) {
    detail::check_pool_args(input, spec, params);
    const int h = static_cast<int>(input.shape().dim(0));
    const int w = static_cast<int>(input.shape().dim(1));
    const int c = static_cast<int>(input.shape().dim(2));
    const int h2 = pool_out_dim(h, spec.extent, spec.stride);
    const int w2 = pool_out_dim(w, spec.extent, spec.stride);

    PoolResultT<T> res{TensorT<T>(Shape{static_cast<std::size_t>(h2), static_cast<std::size_t>(w2),
                                        static_cast<std::size_t>(c)}),
                       std::vector<std::int32_t>(static_cast<std::size_t>(h2) * w2 * c)};
    const T* coeff = spec.trainable_affine ? params->weights.data() : nullptr;
    const T* bias = spec.trainable_affine ? params->biases.data() : nullptr;
    if (runtime::parallel_kernels() && static_cast<long>(h2) * w2 * c > detail::kPoolParCutoff)
        kernels::par::maxpool_forward(input.data(), h, w, c, spec, coeff, bias, res.output.data(),
                                      res.argmax.data(), h2, w2);
    else
        kernels::serial::maxpool_forward(input.data(), h, w, c, spec, coeff, bias,
                                         res.output.data(), res.argmax.data(), h2, w2);
    return res;
}

template <typename T>
struct PoolGradsT {
    TensorT<T> input;
    TensorT<T> coeff;  // empty unless trainable_affine
    TensorT<T> bias;   // empty unless trainable_affine
};

// grad_input must arrive zero-filled (gradients scatter-add into it);
// grad_coeff/grad_bias are required exactly when the affine option is on.
template <typename T>
void maxpool_backward_into(const TensorT<T>& grad_out, const std::vector<std::int32_t>& argmax,
                           const TensorT<T>& input, const PoolSpec& spec,
                           const LayerParamsT<T>* params, TensorT<T>& grad_input,
                           TensorT<T>* grad_coeff, TensorT<T>* grad_bias) {
    detail::check_pool_args(input, spec, params);
    const int h = static_cast<int>(input.shape().dim(0));
    const int w = static_cast<int>(input.shape().dim(1));
    const int c = static_cast<int>(input.shape().dim(2));
    const int h2 = pool_out_dim(h, spec.extent, spec.stride);
    const int w2 = pool_out_dim(w, spec.extent, spec.stride);
    const Shape out_shape{static_cast<std::size_t>(h2), static_cast<std::size_t>(w2),
                          static_cast<std::size_t>(c)};
    if (grad_out.shape() != out_shape)
        throw ShapeError("maxpool backward: grad shape " + grad_out.shape().to_string() +
                         ", expected " + out_shape.to_string());
    if (argmax.size() != grad_out.size())
        throw ShapeError("maxpool backward: argmax cache size does not match grad");
    if (grad_input.shape() != input.shape())
        throw ShapeError("maxpool backward: grad_input buffer does not match the input shape");

    const T* coeff = nullptr;
    T* gcoeff = nullptr;
    T* gbias = nullptr;
    if (spec.trainable_affine) {
        if (!grad_coeff || !grad_bias ||
            grad_coeff->shape() != Shape{static_cast<std::size_t>(c)} ||
            grad_bias->shape() != Shape{static_cast<std::size_t>(c)})
            throw ShapeError("maxpool backward: affine gradient buffers must be per-channel");
        coeff = params->weights.data();
        gcoeff = grad_coeff->data();
        gbias = grad_bias->data();
    }
    if (runtime::parallel_kernels() && static_cast<long>(h2) * w2 * c > detail::kPoolParCutoff)
        kernels::par::maxpool_backward(grad_out.data(), argmax.data(), input.data(), c, coeff,
                                       grad_input.data(), gcoeff, gbias, h2, w2);
    else
        kernels::serial::maxpool_backward(grad_out.data(), argmax.data(), input.data(), c, coeff,
                                          grad_input.data(), gcoeff, gbias, h2, w2);
}

template <typename T>
PoolGradsT<T> maxpool_backward(const TensorT<T>& grad_out, const std::vector<std::int32_t>& argmax,
                               const TensorT<T>& input, const PoolSpec& spec,
                               const LayerParamsT<T>* params = nullptr) {
    PoolGradsT<T> grads{TensorT<T>(input.shape()), {}, {}};
    if (spec.trainable_affine) {
        const std::size_t c = input.shape().dim(2);
        grads.coeff = TensorT<T>(Shape{c});
        grads.bias = TensorT<T>(Shape{c});
    }
    maxpool_backward_into(grad_out, argmax, input, spec, params, grads.input,
                          spec.trainable_affine ? &grads.coeff : nullptr,
                          spec.trainable_affine ? &grads.bias : nullptr);
    return grads;
}

// ---------------------------------------------------------------------------
// Flatten / dense / softmax
// ---------------------------------------------------------------------------

// Row-major flattening; the backward pass is a reshape.
template <typename T>
TensorT<T> flatten(const TensorT<T>& input) {
    return input.reshaped(Shape{input.size()});
}

template <typename T>
TensorT<T> dense_forward(const TensorT<T>& input, const DenseSpec& spec,
                         const LayerParamsT<T>& params) {
    spec.validate();
    if (input.shape().rank() != 1 ||
        input.shape().dim(0) != static_cast<std::size_t>(spec.in_features))
        throw ShapeError("dense: input shape " + input.shape().to_string() + ", expected (" +
                         std::to_string(spec.in_features) + ")");
    const Shape want{static_cast<std::size_t>(spec.out_features),
                     static_cast<std::size_t>(spec.in_features)};
    if (params.weights.shape() != want)
        throw ShapeError("dense: weights shape " + params.weights.shape().to_string() +
                         ", expected " + want.to_string());
    TensorT<T> out(Shape{static_cast<std::size_t>(spec.out_features)});
    const long dense_work = static_cast<long>(spec.in_features) * spec.out_features;
    if (runtime::parallel_kernels() && dense_work > detail::kDenseParCutoff)
        kernels::par::dense_forward(input.data(), params.weights.data(), params.biases.data(),
                                    spec.in_features, spec.out_features, out.data());
    else
        kernels::serial::dense_forward(input.data(), params.weights.data(), params.biases.data(),
                                       spec.in_features, spec.out_features, out.data());
    return out;
}

template <typename T>
struct DenseGradsT {
    TensorT<T> input;
    TensorT<T> weights;
    TensorT<T> biases;
};

template <typename T>
void dense_backward_into(const TensorT<T>& grad_out, const TensorT<T>& input,
                         const DenseSpec& spec, const LayerParamsT<T>& params,
                         TensorT<T>& grad_input, TensorT<T>& grad_weights,
                         TensorT<T>& grad_biases) {
    if (grad_out.shape() != Shape{static_cast<std::size_t>(spec.out_features)})
        throw ShapeError("dense backward: grad shape " + grad_out.shape().to_string() +
                         ", expected (" + std::to_string(spec.out_features) + ")");
    if (grad_input.shape() != input.shape() || grad_weights.shape() != params.weights.shape() ||
        grad_biases.shape() != params.biases.shape())
        throw ShapeError("dense backward: gradient buffers do not match layer shapes");
    const long dense_work = static_cast<long>(spec.in_features) * spec.out_features;
    if (runtime::parallel_kernels() && dense_work > 2 * detail::kDenseParCutoff)
        kernels::par::dense_backward(grad_out.data(), input.data(), params.weights.data(),
                                     spec.in_features, spec.out_features, grad_input.data(),
                                     grad_weights.data(), grad_biases.data());
    else
        kernels::serial::dense_backward(grad_out.data(), input.data(), params.weights.data(),
                                        spec.in_features, spec.out_features, grad_input.data(),
                                        grad_weights.data(), grad_biases.data());
}

template <typename T>
DenseGradsT<T> dense_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                              const DenseSpec& spec, const LayerParamsT<T>& params) {
    DenseGradsT<T> grads{TensorT<T>(input.shape()), TensorT<T>(params.weights.shape()),
                         TensorT<T>(params.biases.shape())};
    dense_backward_into(grad_out, input, spec, params, grads.input, grads.weights, grads.biases);
    return grads;
}

// Probabilities over classes. Computed in double with max-subtraction, so
// there is no overflow for any finite logits and the argmax is preserved.
template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
    if (logits.shape().rank() != 1)
        throw ShapeError("softmax: input must be rank 1, got " + logits.shape().to_string());
    const std::size_t n = logits.size();
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, static_cast<double>(logits[i]));
    std::vector<double> e(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(static_cast<double>(logits[i]) - m);
        sum += e[i];
    }
    TensorT<T> out(logits.shape());
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<T>(e[i] / sum);
    return out;
}

// VJP of softmax given its cached output: gin = p * (g - <p, g>).
template <typename T>
TensorT<T> softmax_backward(const TensorT<T>& grad_out, const TensorT<T>& probs) {
    if (grad_out.shape() != probs.shape())
        throw ShapeError("softmax backward: grad shape " + grad_out.shape().to_string() +
                         " does not match output " + probs.shape().to_string());
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        dot += static_cast<double>(probs[i]) * static_cast<double>(grad_out[i]);
    TensorT<T> gin(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i)
        gin[i] = static_cast<T>(static_cast<double>(probs[i]) *
                                (static_cast<double>(grad_out[i]) - dot));
    return gin;
}

// ---------------------------------------------------------------------------
// Parameter initialisation (paper-silent; fan-in-scaled Gaussian for ReLU)
// ---------------------------------------------------------------------------

// Weights ~ N(0, 2/fan_in) drawn in storage order, biases zero. With a
// connectivity table, masked slots are left at zero and draw nothing, and
// each filter's fan-in counts only its connected channels.
template <typename T>
LayerParamsT<T> init_conv_params(const Conv2DSpec& spec, Rng& rng) {
    spec.validate();
    const int f = spec.kernel, c = spec.in_channels;
    LayerParamsT<T> params{
        TensorT<T>(Shape{static_cast<std::size_t>(spec.filters), static_cast<std::size_t>(f),
                         static_cast<std::size_t>(f), static_cast<std::size_t>(c)}),
        TensorT<T>(Shape{static_cast<std::size_t>(spec.filters)})};
    for (int of = 0; of < spec.filters; ++of) {
        const double std_dev = std::sqrt(2.0 / (static_cast<double>(f) * f * spec.connected_count(of)));
        for (int ky = 0; ky < f; ++ky)
            for (int kx = 0; kx < f; ++kx)
                for (int ic = 0; ic < c; ++ic)
                    if (spec.connected(of, ic))
                        params.weights.at(of, ky, kx, ic) = static_cast<T>(rng.gaussian() * std_dev);
    }
    return params;
}

template <typename T>
LayerParamsT<T> init_dense_params(const DenseSpec& spec, Rng& rng) {
    spec.validate();
    LayerParamsT<T> params{TensorT<T>(Shape{static_cast<std::size_t>(spec.out_features),
                                            static_cast<std::size_t>(spec.in_features)}),
                           TensorT<T>(Shape{static_cast<std::size_t>(spec.out_features)})};
    const double std_dev = std::sqrt(2.0 / spec.in_features);
    for (auto& v : params.weights.values()) v = static_cast<T>(rng.gaussian() * std_dev);
    return params;
}

// Identity affine: coefficients 1, biases 0. Empty tensors without the flag.
template <typename T>
LayerParamsT<T> init_pool_params(const PoolSpec& spec, int channels) {
    if (!spec.trainable_affine) return {};
    return {TensorT<T>(Shape{static_cast<std::size_t>(channels)}, T{1}),
            TensorT<T>(Shape{static_cast<std::size_t>(channels)})};
}

}  // namespace dcnn
