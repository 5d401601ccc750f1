#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// Serial reference vs OpenMP kernels: identical arithmetic per output
// element means bit-equal results, for single ops and for whole training
// runs. These tests pin that contract.

#include "dcnn/model_io.hpp"
#include "dcnn/runtime.hpp"
#include "dcnn/train.hpp"
#include "support/synthetic.hpp"

using namespace dcnn;

namespace {

struct ModeGuard {
    runtime::Mode saved;
    ModeGuard() : saved(runtime::mode()) {}
    ~ModeGuard() { runtime::set_mode(saved); }
};

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(shape);
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform01() * 2 - 1);
    return t;
}

template <typename F>
auto with_mode(runtime::Mode m, F f) {
    ModeGuard guard;
    runtime::set_mode(m);
    return f();
}

}  // namespace

TEST_CASE("conv forward/backward: serial and parallel are bit-equal") {
    ModeGuard guard;
    Rng rng(500);
    for (int round = 0; round < 20; ++round) {
        Conv2DSpec spec;
        spec.kernel = 1 + static_cast<int>(rng.below(5));
        spec.stride = 1 + static_cast<int>(rng.below(3));
        spec.pad = static_cast<int>(rng.below(3));
        spec.filters = 1 + static_cast<int>(rng.below(8));
        spec.in_channels = 1 + static_cast<int>(rng.below(4));
        const int h = spec.kernel + static_cast<int>(rng.below(12));
        const int w = spec.kernel + static_cast<int>(rng.below(12));
        const Tensor input = random_tensor(Shape{static_cast<std::size_t>(h),
                                                 static_cast<std::size_t>(w),
                                                 static_cast<std::size_t>(spec.in_channels)},
                                           rng);
        LayerParams params = init_conv_params<float>(spec, rng);
        const Shape out_shape = conv_output_shape(h, w, spec.in_channels, spec.kernel, spec.pad,
                                                  spec.stride, spec.filters);
        const Tensor gout = random_tensor(out_shape, rng);

        const Tensor fwd_serial =
            with_mode(runtime::Mode::serial, [&] { return conv_forward(input, spec, params); });
        const Tensor fwd_par =
            with_mode(runtime::Mode::parallel, [&] { return conv_forward(input, spec, params); });
        CHECK(fwd_serial == fwd_par);

        const auto bwd_serial = with_mode(runtime::Mode::serial,
                                          [&] { return conv_backward(gout, input, spec, params); });
        const auto bwd_par = with_mode(runtime::Mode::parallel,
                                       [&] { return conv_backward(gout, input, spec, params); });
        CHECK(bwd_serial.input == bwd_par.input);
        CHECK(bwd_serial.weights == bwd_par.weights);
        CHECK(bwd_serial.biases == bwd_par.biases);
    }
}

TEST_CASE("dense, relu, maxpool: serial and parallel are bit-equal") {
    // sizes above the parallel-dispatch cutoffs, so the OpenMP kernels
    // actually run (small layers route to the serial code in both modes)
    ModeGuard guard;
    Rng rng(600);
    for (int round = 0; round < 6; ++round) {
        DenseSpec dspec;
        dspec.in_features = 600 + static_cast<int>(rng.below(64));
        dspec.out_features = 300 + static_cast<int>(rng.below(32));
        const Tensor x = random_tensor(Shape{static_cast<std::size_t>(dspec.in_features)}, rng);
        LayerParams dp = init_dense_params<float>(dspec, rng);
        const Tensor dg = random_tensor(Shape{static_cast<std::size_t>(dspec.out_features)}, rng);

        CHECK(with_mode(runtime::Mode::serial, [&] { return dense_forward(x, dspec, dp); }) ==
              with_mode(runtime::Mode::parallel, [&] { return dense_forward(x, dspec, dp); }));
        const auto dbs = with_mode(runtime::Mode::serial,
                                   [&] { return dense_backward(dg, x, dspec, dp); });
        const auto dbp = with_mode(runtime::Mode::parallel,
                                   [&] { return dense_backward(dg, x, dspec, dp); });
        CHECK(dbs.input == dbp.input);
        CHECK(dbs.weights == dbp.weights);
        CHECK(dbs.biases == dbp.biases);

        const Tensor img = random_tensor(Shape{96, 96, 3}, rng);
        CHECK(with_mode(runtime::Mode::serial, [&] { return relu_forward(img); }) ==
              with_mode(runtime::Mode::parallel, [&] { return relu_forward(img); }));

        PoolSpec pspec;
        pspec.extent = 1 + static_cast<int>(rng.below(3));
        pspec.stride = 1 + static_cast<int>(rng.below(3));
        const auto ps =
            with_mode(runtime::Mode::serial, [&] { return maxpool_forward(img, pspec); });
        const auto pp =
            with_mode(runtime::Mode::parallel, [&] { return maxpool_forward(img, pspec); });
        CHECK(ps.output == pp.output);
        CHECK(ps.argmax == pp.argmax);

        const Tensor pg = random_tensor(ps.output.shape(), rng);
        const auto pbs = with_mode(runtime::Mode::serial, [&] {
            return maxpool_backward(pg, ps.argmax, img, pspec);
        });
        const auto pbp = with_mode(runtime::Mode::parallel, [&] {
            return maxpool_backward(pg, pp.argmax, img, pspec);
        });
        CHECK(pbs.input == pbp.input);
    }
}

TEST_CASE("evaluate and train: serial and parallel runs are bit-identical") {
    ModeGuard guard;
    const auto ds = synthetic::make_glyph_dataset(4, 10, 210);
    const auto split = split_dataset(ds.examples, ds.class_names, 0.8, 11);

    const Model frozen = assemble_reference_model(33, 4);
    const EvalReport es =
        with_mode(runtime::Mode::serial, [&] { return evaluate(frozen, split.test); });
    const EvalReport ep =
        with_mode(runtime::Mode::parallel, [&] { return evaluate(frozen, split.test); });
    CHECK(es.loss == ep.loss);
    CHECK(es.accuracy == ep.accuracy);
    CHECK(es.confusion == ep.confusion);

    TrainConfig config;
    config.epochs = 2;
    config.batch_size = 8;
    config.seed = 4;
    const TrainResult ts = with_mode(runtime::Mode::serial, [&] {
        return train(assemble_reference_model(33, 4), split.train, split.test, config);
    });
    const TrainResult tp = with_mode(runtime::Mode::parallel, [&] {
        return train(assemble_reference_model(33, 4), split.train, split.test, config);
    });
    CHECK(training_log_csv(ts.log) == training_log_csv(tp.log));
    for (std::size_t i = 0; i < ts.model.params.size(); ++i) {
        CHECK(ts.model.params[i].weights == tp.model.params[i].weights);
        CHECK(ts.model.params[i].biases == tp.model.params[i].biases);
    }
}
