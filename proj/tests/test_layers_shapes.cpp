#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcnn/layers.hpp"
#include "dcnn/rng.hpp"
#include "support/oracles.hpp"

using namespace dcnn;

TEST_CASE("conv output shape: pinned cases") {
    CHECK(conv_output_shape(32, 32, 3, 5, 0, 1, 6) == Shape{28, 28, 6});  // 784 neurons per map
    CHECK(conv_output_shape(32, 32, 1, 1, 0, 1, 1) == Shape{32, 32, 1});
    CHECK(conv_output_shape(32, 32, 1, 5, 2, 2, 8) == Shape{16, 16, 8});
    CHECK_THROWS_AS(conv_output_shape(4, 4, 1, 7, 0, 1, 1), ShapeError);
    CHECK_THROWS_AS(conv_output_shape(4, 4, 1, 3, 0, 0, 1), ShapeError);
}

TEST_CASE("conv output shape equals window enumeration") {
    int cases = 0;
    for (int h = 1; h <= 12; ++h)
        for (int w = 1; w <= 12; ++w)
            for (int f = 1; f <= 5; ++f)
                for (int p = 0; p <= 2; ++p)
                    for (int s = 1; s <= 3; ++s) {
                        if (h + 2 * p < f || w + 2 * p < f) continue;
                        const Shape got = conv_output_shape(h, w, 1, f, p, s, 3);
                        CHECK(got.dim(0) ==
                              static_cast<std::size_t>(oracle::enumerate_positions(h, f, p, s)));
                        CHECK(got.dim(1) ==
                              static_cast<std::size_t>(oracle::enumerate_positions(w, f, p, s)));
                        CHECK(got.dim(2) == 3);
                        ++cases;
                    }
    CHECK(cases > 1000);
}

TEST_CASE("pool output shape: pinned cases") {
    CHECK(pool_output_shape(28, 28, 6, 2, 2) == Shape{14, 14, 6});  // half the size
    CHECK(pool_output_shape(9, 7, 2, 1, 1) == Shape{9, 7, 2});      // unit pooling keeps the shape
    CHECK(pool_output_shape(32, 32, 3, 2, 2) == Shape{16, 16, 3});
    CHECK_THROWS_AS(pool_output_shape(3, 3, 1, 4, 1), ShapeError);
}

TEST_CASE("pool output shape equals window enumeration") {
    for (int w = 1; w <= 12; ++w)
        for (int h = 1; h <= 12; ++h)
            for (int se = 1; se <= 4; ++se)
                for (int sd = 1; sd <= 3; ++sd) {
                    if (w < se || h < se) continue;
                    const Shape got = pool_output_shape(w, h, 5, se, sd);
                    CHECK(got.dim(0) ==
                          static_cast<std::size_t>(oracle::enumerate_positions(w, se, 0, sd)));
                    CHECK(got.dim(1) ==
                          static_cast<std::size_t>(oracle::enumerate_positions(h, se, 0, sd)));
                    CHECK(got.dim(2) == 5);
                }
}

namespace {

// independent count: walk the instantiated parameter tensors and count the
// trainable slots one by one
std::int64_t count_conv_scalars(const Conv2DSpec& spec) {
    Rng rng(1);
    const auto params = init_conv_params<float>(spec, rng);
    std::int64_t n = 0;
    for (int of = 0; of < spec.filters; ++of) {
        for (int ky = 0; ky < spec.kernel; ++ky)
            for (int kx = 0; kx < spec.kernel; ++kx)
                for (int ic = 0; ic < spec.in_channels; ++ic)
                    if (spec.connected(of, ic)) ++n;
        ++n;  // bias
    }
    CHECK(params.weights.size() ==
          static_cast<std::size_t>(spec.filters) * spec.kernel * spec.kernel * spec.in_channels);
    CHECK(params.biases.size() == static_cast<std::size_t>(spec.filters));
    return n;
}

}  // namespace

TEST_CASE("conv parameter count") {
    Conv2DSpec lenet_c1;
    lenet_c1.filters = 6;
    lenet_c1.kernel = 5;
    lenet_c1.in_channels = 1;
    CHECK(conv_param_count(lenet_c1) == 156);  // (5*5+1)*6

    Conv2DSpec tiny;
    tiny.filters = 1;
    tiny.kernel = 1;
    tiny.in_channels = 1;
    CHECK(conv_param_count(tiny) == 2);

    Conv2DSpec mid;
    mid.filters = 32;
    mid.kernel = 3;
    mid.in_channels = 16;
    CHECK(conv_param_count(mid) == 4640);
    CHECK(conv_param_count(mid) == count_conv_scalars(mid));
}

TEST_CASE("conv parameter count with a connectivity table counts connected channels only") {
    Conv2DSpec spec;
    spec.filters = 3;
    spec.kernel = 2;
    spec.in_channels = 4;
    // filter 0 sees channels {0,1}, filter 1 sees {2}, filter 2 sees all
    spec.connectivity = {1, 1, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1};
    CHECK(conv_param_count(spec) == (4 * 2 + 1) + (4 * 1 + 1) + (4 * 4 + 1));
    CHECK(conv_param_count(spec) == count_conv_scalars(spec));

    Conv2DSpec empty_row = spec;
    empty_row.connectivity = {1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    CHECK_THROWS_AS(conv_param_count(empty_row), ArgumentError);
}

TEST_CASE("conv parameter count matches instantiation for 100 random specs") {
    Rng rng(42);
    for (int round = 0; round < 100; ++round) {
        Conv2DSpec spec;
        spec.filters = 1 + static_cast<int>(rng.below(8));
        spec.kernel = 1 + static_cast<int>(rng.below(5));
        spec.in_channels = 1 + static_cast<int>(rng.below(6));
        if (rng.below(2)) {
            spec.connectivity.assign(
                static_cast<std::size_t>(spec.filters) * spec.in_channels, 0);
            for (int of = 0; of < spec.filters; ++of) {
                // at least one connected channel per filter
                spec.connectivity[static_cast<std::size_t>(of) * spec.in_channels +
                                  rng.below(static_cast<std::size_t>(spec.in_channels))] = 1;
                for (int ic = 0; ic < spec.in_channels; ++ic)
                    if (rng.below(2))
                        spec.connectivity[static_cast<std::size_t>(of) * spec.in_channels + ic] = 1;
            }
        }
        CHECK(conv_param_count(spec) == count_conv_scalars(spec));
    }
}

TEST_CASE("dense parameter count") {
    DenseSpec wide;
    wide.in_features = 32 * 32 * 3;
    wide.out_features = 28 * 28 * 6;
    CHECK(dense_param_count(wide, false) == 14'450'688);  // the "14 million" count

    DenseSpec unit;
    unit.in_features = 1;
    unit.out_features = 1;
    CHECK(dense_param_count(unit, true) == 2);

    DenseSpec fc;
    fc.in_features = 400;
    fc.out_features = 128;
    CHECK(dense_param_count(fc, true) == 51'328);

    Rng rng(9);
    for (int round = 0; round < 100; ++round) {
        DenseSpec spec;
        spec.in_features = 1 + static_cast<int>(rng.below(300));
        spec.out_features = 1 + static_cast<int>(rng.below(50));
        const auto params = init_dense_params<float>(spec, rng);
        CHECK(dense_param_count(spec, true) ==
              static_cast<std::int64_t>(params.weights.size() + params.biases.size()));
        CHECK(dense_param_count(spec, false) ==
              static_cast<std::int64_t>(params.weights.size()));
    }
}

TEST_CASE("pooling introduces zero parameters unless the affine option is on") {
    PoolSpec plain;
    plain.extent = 2;
    plain.stride = 2;
    CHECK(pool_param_count(plain, 6) == 0);
    CHECK(init_pool_params<float>(plain, 6).weights.empty());

    PoolSpec affine = plain;
    affine.trainable_affine = true;
    CHECK(pool_param_count(affine, 6) == 12);
    const auto params = init_pool_params<float>(affine, 6);
    CHECK(params.weights.size() == 6);
    CHECK(params.biases.size() == 6);
    for (float c : params.weights.values()) CHECK(c == 1.0f);
    for (float b : params.biases.values()) CHECK(b == 0.0f);
}
