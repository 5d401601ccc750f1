#pragma once

#include <cstdint>
#include <vector>

#include "dcnn/tensor.hpp"

namespace dcnn {

// Convolution layer description. A filter is f x f x in_channels; the output
// volume has `filters` channels. `connectivity`, when non-empty, is a
// filters x in_channels row-major boolean table; a filter reads only its
// connected input channels (empty means fully connected).
struct Conv2DSpec {
    int filters = 1;      // n_f
    int kernel = 1;       // f, side length
    int stride = 1;       // s
    int pad = 0;          // zero-padding per side
    int in_channels = 1;  // c
    std::vector<std::uint8_t> connectivity;

    bool connected(int filter, int channel) const {
        return connectivity.empty() ||
               connectivity[static_cast<std::size_t>(filter) * in_channels + channel] != 0;
    }

    int connected_count(int filter) const {
        if (connectivity.empty()) return in_channels;
        int n = 0;
        for (int c = 0; c < in_channels; ++c)
            if (connected(filter, c)) ++n;
        return n;
    }

    void validate() const;
};

// Max-pooling layer description. With trainable_affine the pooled maximum is
// multiplied by a per-channel coefficient and shifted by a per-channel bias;
// without it the layer has zero parameters.
struct PoolSpec {
    int extent = 2;  // SE, window side
    int stride = 2;  // SD
    bool trainable_affine = false;

    void validate() const;
};

struct DenseSpec {
    int in_features = 1;
    int out_features = 1;

    void validate() const;
};

// Trainable tensors of one layer. Conv: weights (filters, f, f, in_channels)
// and biases (filters). Dense: weights (out, in) and biases (out). Pooling
// with the affine option: weights = per-channel coefficients, biases =
// per-channel biases. Parameterless layers hold empty tensors.
template <typename T>
struct LayerParamsT {
    TensorT<T> weights;
    TensorT<T> biases;
};

using LayerParams = LayerParamsT<float>;

// Output volume of a convolution over an h x w x c input:
// floor((h - f + 2p)/s) + 1 by floor((w - f + 2p)/s) + 1 by n_f.
// Throws ShapeError when the kernel does not fit the padded input.
Shape conv_output_shape(int h, int w, int c, int f, int p, int s, int n_f);

// Trainable scalar count of a conv layer: per filter, kernel*kernel weights
// for each connected channel, plus one bias.
std::int64_t conv_param_count(const Conv2DSpec& spec);

// Weights-only count in*out, or (in + 1)*out with the bias row included.
std::int64_t dense_param_count(const DenseSpec& spec, bool include_bias);

// Pooled spatial dimension: floor((size - extent)/stride) + 1. Trailing
// rows/columns that do not fill a window are dropped.
int pool_out_dim(int size, int extent, int stride);

// Pooled volume of a w1 x h1 x d1 input; the two spatial dims shrink per
// pool_out_dim, depth is preserved.
Shape pool_output_shape(int w1, int h1, int d1, int extent, int stride);

// 0 without the affine option, coefficient + bias per channel with it.
std::int64_t pool_param_count(const PoolSpec& spec, int channels);

}  // namespace dcnn
