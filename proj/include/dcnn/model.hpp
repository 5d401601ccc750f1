#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dcnn/layers.hpp"

namespace dcnn {

struct ReluSpec {};
struct FlattenSpec {};
struct SoftmaxSpec {};

using LayerSpec = std::variant<Conv2DSpec, ReluSpec, PoolSpec, FlattenSpec, DenseSpec, SoftmaxSpec>;

// An assembled network: ordered layer specs plus their trainable parameters.
// Consecutive layer shapes chain (validated at assembly), and the final
// output length equals class_count.
struct Model {
    Shape input_shape;
    int class_count = 0;
    std::vector<std::string> class_names;  // size class_count
    std::vector<LayerSpec> layers;
    std::vector<LayerParams> params;  // parallel to layers; empty tensors where none

    std::int64_t parameter_count() const;
};

// Output shape of one layer applied to `in`; throws ShapeError when the
// layer cannot consume that shape.
Shape layer_output_shape(const LayerSpec& spec, const Shape& in);

// Trainable scalars of one layer when applied to `in`.
std::int64_t layer_param_count(const LayerSpec& spec, const Shape& in);

// Short human-readable form, e.g. "conv 6x5x5 s1 p0" or "maxpool 2/2".
std::string layer_name(const LayerSpec& spec);

// Per-layer output shapes for the whole chain; validates the chain and the
// final class_count.
std::vector<Shape> chain_shapes(const Model& model);

// Build a model from specs: validates the chain, then initialises parameters
// from the seed (fan-in Gaussian weights, zero biases, identity pool affine).
// class_names defaults to "0".."N-1" when empty.
Model assemble_model(Shape input_shape, int class_count, std::vector<LayerSpec> layers,
                     std::uint64_t seed, std::vector<std::string> class_names = {});

// The 36-class Devanagari classifier:
//   conv 6x5x5 -> relu -> maxpool 2/2 -> conv 16x5x5 -> relu -> maxpool 2/2
//   -> flatten -> dense 400->128 -> relu -> dense 128->36 -> softmax
// on a 32x32x1 input. Both pooling layers carry the trainable per-channel
// coefficient and bias, giving 58,588 trainable parameters in total.
Model assemble_reference_model(std::uint64_t seed, int class_count = 36,
                               Shape input_shape = Shape{32, 32, 1});

// Per-example activation cache for the backward pass: acts[i] is the input
// of layer i, acts.back() the network output; pool layers also record their
// argmax routing.
struct ForwardTrace {
    std::vector<Tensor> acts;
    std::vector<std::vector<std::int32_t>> pool_argmax;  // parallel to layers; empty for non-pool
};

Tensor model_forward(const Model& model, const Tensor& input, ForwardTrace* trace = nullptr);

// Gradient buffers shaped like model.params, zero-filled.
std::vector<LayerParams> make_grad_buffers(const Model& model);

// Backpropagate grad_output (gradient w.r.t. the network output) through the
// trace; writes parameter gradients into `grads` (overwriting).
void model_backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_output,
                    std::vector<LayerParams>& grads);

// Argmax of the softmax output (equivalently of the logits).
int predict_class(const Model& model, const Tensor& input);

}  // namespace dcnn
