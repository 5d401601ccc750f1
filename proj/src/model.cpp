#include "dcnn/model.hpp"

#include <utility>

namespace dcnn {

namespace {

template <class... Fs>
struct Overload : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

}  // namespace

Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
    return std::visit(
        Overload{
            [&](const Conv2DSpec& s) {
                if (in.rank() != 3)
                    throw ShapeError("conv layer needs a rank-3 input, got " + in.to_string());
                return conv_output_shape(static_cast<int>(in.dim(0)), static_cast<int>(in.dim(1)),
                                         static_cast<int>(in.dim(2)), s.kernel, s.pad, s.stride,
                                         s.filters);
            },
            [&](const PoolSpec& s) {
                if (in.rank() != 3)
                    throw ShapeError("maxpool layer needs a rank-3 input, got " + in.to_string());
                const int h2 = pool_out_dim(static_cast<int>(in.dim(0)), s.extent, s.stride);
                const int w2 = pool_out_dim(static_cast<int>(in.dim(1)), s.extent, s.stride);
                return Shape{static_cast<std::size_t>(h2), static_cast<std::size_t>(w2), in.dim(2)};
            },
            [&](const DenseSpec& s) {
                if (in.rank() != 1 || in.dim(0) != static_cast<std::size_t>(s.in_features))
                    throw ShapeError("dense layer expects input (" + std::to_string(s.in_features) +
                                     "), got " + in.to_string());
                return Shape{static_cast<std::size_t>(s.out_features)};
            },
            [&](const FlattenSpec&) { return Shape{in.count()}; },
            [&](const ReluSpec&) { return in; },
            [&](const SoftmaxSpec&) {
                if (in.rank() != 1)
                    throw ShapeError("softmax layer needs a rank-1 input, got " + in.to_string());
                return in;
            },
        },
        spec);
}

std::int64_t layer_param_count(const LayerSpec& spec, const Shape& in) {
    return std::visit(Overload{
                          [](const Conv2DSpec& s) { return conv_param_count(s); },
                          [&](const PoolSpec& s) {
                              return pool_param_count(s, static_cast<int>(in.dim(2)));
                          },
                          [](const DenseSpec& s) { return dense_param_count(s, true); },
                          [](const auto&) { return std::int64_t{0}; },
                      },
                      spec);
}

std::string layer_name(const LayerSpec& spec) {
    return std::visit(
        Overload{
            [](const Conv2DSpec& s) {
                std::string n = "conv " + std::to_string(s.filters) + "x" +
                                std::to_string(s.kernel) + "x" + std::to_string(s.kernel) + " s" +
                                std::to_string(s.stride) + " p" + std::to_string(s.pad);
                if (!s.connectivity.empty()) n += " partial";
                return n;
            },
            [](const PoolSpec& s) {
                std::string n = "maxpool " + std::to_string(s.extent) + "/" + std::to_string(s.stride);
                if (s.trainable_affine) n += " affine";
                return n;
            },
            [](const DenseSpec& s) {
                return "dense " + std::to_string(s.in_features) + "->" +
                       std::to_string(s.out_features);
            },
            [](const ReluSpec&) { return std::string("relu"); },
            [](const FlattenSpec&) { return std::string("flatten"); },
            [](const SoftmaxSpec&) { return std::string("softmax"); },
        },
        spec);
}

std::vector<Shape> chain_shapes(const Model& model) {
    std::vector<Shape> shapes;
    shapes.reserve(model.layers.size());
    Shape cur = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        try {
            cur = layer_output_shape(model.layers[i], cur);
        } catch (const Error& e) {
            throw ShapeError("layer " + std::to_string(i) + " (" + layer_name(model.layers[i]) +
                             "): " + e.what());
        }
        shapes.push_back(cur);
    }
    if (shapes.empty()) throw ArgumentError("model has no layers");
    const Shape& out = shapes.back();
    if (out.rank() != 1 || out.dim(0) != static_cast<std::size_t>(model.class_count))
        throw ShapeError("model output " + out.to_string() + " does not match class count " +
                         std::to_string(model.class_count));
    return shapes;
}

std::int64_t Model::parameter_count() const {
    std::int64_t total = 0;
    Shape cur = input_shape;
    for (const auto& layer : layers) {
        total += layer_param_count(layer, cur);
        cur = layer_output_shape(layer, cur);
    }
    return total;
}

Model assemble_model(Shape input_shape, int class_count, std::vector<LayerSpec> layers,
                     std::uint64_t seed, std::vector<std::string> class_names) {
    if (class_count < 1) throw ArgumentError("model: class count must be >= 1");
    Model model;
    model.input_shape = input_shape;
    model.class_count = class_count;
    model.layers = std::move(layers);
    if (class_names.empty()) {
        for (int i = 0; i < class_count; ++i) class_names.push_back(std::to_string(i));
    } else if (class_names.size() != static_cast<std::size_t>(class_count)) {
        throw ArgumentError("model: " + std::to_string(class_names.size()) +
                            " class names for class count " + std::to_string(class_count));
    }
    model.class_names = std::move(class_names);

    const std::vector<Shape> shapes = chain_shapes(model);

    Rng rng(seed);
    model.params.reserve(model.layers.size());
    Shape cur = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (const auto* conv = std::get_if<Conv2DSpec>(&model.layers[i]))
            model.params.push_back(init_conv_params<float>(*conv, rng));
        else if (const auto* dense = std::get_if<DenseSpec>(&model.layers[i]))
            model.params.push_back(init_dense_params<float>(*dense, rng));
        else if (const auto* pool = std::get_if<PoolSpec>(&model.layers[i]))
            model.params.push_back(init_pool_params<float>(*pool, static_cast<int>(cur.dim(2))));
        else
            model.params.push_back({});
        cur = shapes[i];
    }
    return model;
}

Model assemble_reference_model(std::uint64_t seed, int class_count, Shape input_shape) {
    const int in_ch = static_cast<int>(input_shape.dim(2));
    Conv2DSpec c1;
    c1.filters = 6;
    c1.kernel = 5;
    c1.in_channels = in_ch;
    Conv2DSpec c2;
    c2.filters = 16;
    c2.kernel = 5;
    c2.in_channels = 6;

    std::vector<LayerSpec> layers;
    layers.push_back(c1);
    layers.push_back(ReluSpec{});
    layers.push_back(PoolSpec{.extent = 2, .stride = 2, .trainable_affine = true});
    layers.push_back(c2);
    layers.push_back(ReluSpec{});
    layers.push_back(PoolSpec{.extent = 2, .stride = 2, .trainable_affine = true});
    layers.push_back(FlattenSpec{});

    // flatten length depends on the input size; 400 for the 32x32 default
    Shape cur = input_shape;
    for (const auto& l : layers) cur = layer_output_shape(l, cur);
    const int flat = static_cast<int>(cur.dim(0));

    layers.push_back(DenseSpec{.in_features = flat, .out_features = 128});
    layers.push_back(ReluSpec{});
    layers.push_back(DenseSpec{.in_features = 128, .out_features = class_count});
    layers.push_back(SoftmaxSpec{});
    return assemble_model(input_shape, class_count, std::move(layers), seed);
}

Tensor model_forward(const Model& model, const Tensor& input, ForwardTrace* trace) {
    if (input.shape() != model.input_shape)
        throw ShapeError("model: input shape " + input.shape().to_string() + ", expected " +
                         model.input_shape.to_string());
    if (trace) {
        trace->acts.clear();
        trace->acts.reserve(model.layers.size() + 1);
        trace->pool_argmax.assign(model.layers.size(), {});
        trace->acts.push_back(input);
    }
    Tensor cur = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerParams& p = model.params[i];
        cur = std::visit(
            Overload{
                [&](const Conv2DSpec& s) { return conv_forward(cur, s, p); },
                [&](const ReluSpec&) { return relu_forward(cur); },
                [&](const PoolSpec& s) {
                    auto res = maxpool_forward(cur, s, s.trainable_affine ? &p : nullptr);
                    if (trace) trace->pool_argmax[i] = std::move(res.argmax);
                    return std::move(res.output);
                },
                [&](const FlattenSpec&) { return flatten(cur); },
                [&](const DenseSpec& s) { return dense_forward(cur, s, p); },
                [&](const SoftmaxSpec&) { return softmax(cur); },
            },
            model.layers[i]);
        if (trace) trace->acts.push_back(cur);
    }
    return cur;
}

std::vector<LayerParams> make_grad_buffers(const Model& model) {
    std::vector<LayerParams> grads;
    grads.reserve(model.params.size());
    for (const auto& p : model.params)
        grads.push_back({Tensor(p.weights.shape()), Tensor(p.biases.shape())});
    return grads;
}

void model_backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_output,
                    std::vector<LayerParams>& grads) {
    if (trace.acts.size() != model.layers.size() + 1)
        throw ArgumentError("model backward: trace does not match model");
    if (grads.size() != model.params.size())
        throw ArgumentError("model backward: gradient buffers do not match model");

    // parameter gradients land in the caller's buffers (reused across
    // examples by the training loop); only the small activation-gradient
    // chain is allocated per call
    Tensor grad = grad_output;
    for (std::size_t ri = model.layers.size(); ri-- > 0;) {
        const Tensor& layer_in = trace.acts[ri];
        const LayerParams& p = model.params[ri];
        grad = std::visit(
            Overload{
                [&](const Conv2DSpec& s) {
                    Tensor gin(layer_in.shape());
                    conv_backward_into(grad, layer_in, s, p, gin, grads[ri].weights,
                                       grads[ri].biases);
                    return gin;
                },
                [&](const ReluSpec&) { return relu_backward(grad, layer_in); },
                [&](const PoolSpec& s) {
                    Tensor gin(layer_in.shape());
                    maxpool_backward_into(grad, trace.pool_argmax[ri], layer_in, s,
                                          s.trainable_affine ? &p : nullptr, gin,
                                          s.trainable_affine ? &grads[ri].weights : nullptr,
                                          s.trainable_affine ? &grads[ri].biases : nullptr);
                    return gin;
                },
                [&](const FlattenSpec&) { return grad.reshaped(layer_in.shape()); },
                [&](const DenseSpec& s) {
                    Tensor gin(layer_in.shape());
                    dense_backward_into(grad, layer_in, s, p, gin, grads[ri].weights,
                                        grads[ri].biases);
                    return gin;
                },
                [&](const SoftmaxSpec&) {
                    // trace.acts[ri + 1] is the cached softmax output
                    return softmax_backward(grad, trace.acts[ri + 1]);
                },
            },
            model.layers[ri]);
    }
}

int predict_class(const Model& model, const Tensor& input) {
    const Tensor probs = model_forward(model, input);
    int best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace dcnn
