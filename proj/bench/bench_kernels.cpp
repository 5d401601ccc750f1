// Serial reference vs OpenMP kernels on the reference network's layer
// shapes, plus a whole training epoch. Results are checked bit-equal while
// timing, so the benchmark doubles as a consistency run.
//
// Usage: dcnn_bench [epoch_images]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dcnn/runtime.hpp"
#include "dcnn/train.hpp"
#include "support/synthetic.hpp"

using namespace dcnn;
using Clock = std::chrono::steady_clock;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(shape);
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform01() * 2 - 1);
    return t;
}

template <typename F>
double time_ms(F body, int reps) {
    body();  // warm up
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) body();
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / reps;
}

template <typename F>
void row(const char* name, int reps, F body) {
    runtime::set_mode(runtime::Mode::serial);
    const double serial_ms = time_ms(body, reps);
    runtime::set_mode(runtime::Mode::parallel);
    const double par_ms = time_ms(body, reps);
    std::printf("%-34s %10.3f %10.3f %8.2fx\n", name, serial_ms, par_ms, serial_ms / par_ms);
}

}  // namespace

int main(int argc, char** argv) {
    const int epoch_images = argc > 1 ? std::atoi(argv[1]) : 512;
    std::printf("threads available: %d\n", runtime::max_threads());
    std::printf("%-34s %10s %10s %9s\n", "kernel", "serial ms", "openmp ms", "speedup");

    Rng rng(1);

    // reference net layer shapes
    Conv2DSpec conv1;
    conv1.filters = 6;
    conv1.kernel = 5;
    conv1.in_channels = 1;
    const Tensor in1 = random_tensor(Shape{32, 32, 1}, rng);
    const LayerParams p1 = init_conv_params<float>(conv1, rng);
    row("conv 6x5x5 fwd (32x32x1)", 400, [&] { return conv_forward(in1, conv1, p1); });
    const Tensor g1 = random_tensor(Shape{28, 28, 6}, rng);
    row("conv 6x5x5 bwd", 200, [&] { return conv_backward(g1, in1, conv1, p1); });

    Conv2DSpec conv2;
    conv2.filters = 16;
    conv2.kernel = 5;
    conv2.in_channels = 6;
    const Tensor in2 = random_tensor(Shape{14, 14, 6}, rng);
    const LayerParams p2 = init_conv_params<float>(conv2, rng);
    row("conv 16x5x5 fwd (14x14x6)", 400, [&] { return conv_forward(in2, conv2, p2); });
    const Tensor g2 = random_tensor(Shape{10, 10, 16}, rng);
    row("conv 16x5x5 bwd", 200, [&] { return conv_backward(g2, in2, conv2, p2); });

    PoolSpec pool;
    pool.extent = 2;
    pool.stride = 2;
    const Tensor inp = random_tensor(Shape{28, 28, 6}, rng);
    row("maxpool 2/2 fwd (28x28x6)", 2000, [&] { return maxpool_forward(inp, pool); });

    DenseSpec dense;
    dense.in_features = 400;
    dense.out_features = 128;
    const Tensor ind = random_tensor(Shape{400}, rng);
    const LayerParams pd = init_dense_params<float>(dense, rng);
    row("dense 400->128 fwd", 2000, [&] { return dense_forward(ind, dense, pd); });
    const Tensor gd = random_tensor(Shape{128}, rng);
    row("dense 400->128 bwd", 2000, [&] { return dense_backward(gd, ind, dense, pd); });

    const Tensor a = random_tensor(Shape{256, 256}, rng);
    const Tensor b = random_tensor(Shape{256, 256}, rng);
    row("matmul 256x256x256", 20, [&] { return matmul(a, b); });

    // full epoch over synthetic glyphs: batch-level parallelism
    const int per_class = std::max(1, epoch_images / synthetic::kGlyphClasses);
    const auto ds = synthetic::make_glyph_dataset(synthetic::kGlyphClasses, per_class, 7);
    TrainConfig config;
    config.epochs = 1;
    config.seed = 3;
    std::printf("training epoch over %zu images, batch %d:\n", ds.examples.size(),
                config.batch_size);
    row("  epoch (fwd+bwd+sgd+2 evals)", 1, [&] {
        return train(assemble_reference_model(11, synthetic::kGlyphClasses), ds.examples,
                     ds.examples, config);
    });

    // the two modes must agree bit-for-bit
    runtime::set_mode(runtime::Mode::serial);
    const auto rs = train(assemble_reference_model(11, synthetic::kGlyphClasses), ds.examples,
                          ds.examples, config);
    runtime::set_mode(runtime::Mode::parallel);
    const auto rp = train(assemble_reference_model(11, synthetic::kGlyphClasses), ds.examples,
                          ds.examples, config);
    const bool same = training_log_csv(rs.log) == training_log_csv(rp.log);
    std::printf("serial/openmp epoch logs identical: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
