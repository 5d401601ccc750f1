#include "dcnn/layer_specs.hpp"

#include <string>

namespace dcnn {

void Conv2DSpec::validate() const {
    if (filters < 1) throw ArgumentError("conv spec: filters must be >= 1");
    if (kernel < 1) throw ArgumentError("conv spec: kernel must be >= 1");
    if (stride < 1) throw ArgumentError("conv spec: stride must be >= 1");
    if (pad < 0) throw ArgumentError("conv spec: pad must be >= 0");
    if (in_channels < 1) throw ArgumentError("conv spec: in_channels must be >= 1");
    if (!connectivity.empty()) {
        if (connectivity.size() != static_cast<std::size_t>(filters) * in_channels)
            throw ArgumentError("conv spec: connectivity table must be filters x in_channels");
        for (int of = 0; of < filters; ++of)
            if (connected_count(of) == 0)
                throw ArgumentError("conv spec: filter " + std::to_string(of) +
                                    " has no connected input channels");
    }
}

void PoolSpec::validate() const {
    if (extent < 1) throw ArgumentError("pool spec: extent must be >= 1");
    if (stride < 1) throw ArgumentError("pool spec: stride must be >= 1");
}

void DenseSpec::validate() const {
    if (in_features < 1) throw ArgumentError("dense spec: in_features must be >= 1");
    if (out_features < 1) throw ArgumentError("dense spec: out_features must be >= 1");
}

Shape conv_output_shape(int h, int w, int c, int f, int p, int s, int n_f) {
    if (h < 1 || w < 1 || c < 1) throw ShapeError("conv shape: input dims must be >= 1");
    if (f < 1) throw ShapeError("conv shape: kernel must be >= 1");
    if (p < 0) throw ShapeError("conv shape: pad must be >= 0");
    if (s < 1) throw ShapeError("conv shape: stride must be >= 1");
    if (n_f < 1) throw ShapeError("conv shape: filter count must be >= 1");
    if (h + 2 * p < f || w + 2 * p < f)
        throw ShapeError("conv shape: " + std::to_string(f) + "x" + std::to_string(f) +
                         " kernel larger than padded input " + std::to_string(h + 2 * p) + "x" +
                         std::to_string(w + 2 * p));
    const int h2 = (h - f + 2 * p) / s + 1;
    const int w2 = (w - f + 2 * p) / s + 1;
    return Shape{static_cast<std::size_t>(h2), static_cast<std::size_t>(w2),
                 static_cast<std::size_t>(n_f)};
}

std::int64_t conv_param_count(const Conv2DSpec& spec) {
    spec.validate();
    std::int64_t total = 0;
    for (int of = 0; of < spec.filters; ++of)
        total += static_cast<std::int64_t>(spec.kernel) * spec.kernel * spec.connected_count(of) + 1;
    return total;
}

std::int64_t dense_param_count(const DenseSpec& spec, bool include_bias) {
    spec.validate();
    const std::int64_t in = spec.in_features + (include_bias ? 1 : 0);
    return in * spec.out_features;
}

int pool_out_dim(int size, int extent, int stride) {
    if (extent < 1 || stride < 1) throw ShapeError("pool shape: extent and stride must be >= 1");
    if (size < extent)
        throw ShapeError("pool shape: extent " + std::to_string(extent) +
                         " exceeds input dimension " + std::to_string(size));
    return (size - extent) / stride + 1;
}

Shape pool_output_shape(int w1, int h1, int d1, int extent, int stride) {
    if (w1 < 1 || h1 < 1 || d1 < 1) throw ShapeError("pool shape: input dims must be >= 1");
    const int w2 = pool_out_dim(w1, extent, stride);
    const int h2 = pool_out_dim(h1, extent, stride);
    return Shape{static_cast<std::size_t>(w2), static_cast<std::size_t>(h2),
                 static_cast<std::size_t>(d1)};
}

std::int64_t pool_param_count(const PoolSpec& spec, int channels) {
    spec.validate();
    if (channels < 1) throw ArgumentError("pool params: channels must be >= 1");
    return spec.trainable_affine ? 2 * static_cast<std::int64_t>(channels) : 0;
}

}  // namespace dcnn
