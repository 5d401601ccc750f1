#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcnn/dataset.hpp"
#include "dcnn/model.hpp"

namespace dcnn {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    float learning_rate = 0.01f;
    float momentum = 0.9f;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;

    void validate() const;
};

// Loss, accuracy and macro precision/recall plus the confusion matrix they
// derive from. confusion[true_class * class_count + predicted] counts
// examples, so rows sum to the per-class true counts and
// accuracy = trace / total.
struct EvalReport {
    int class_count = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    std::vector<std::int64_t> confusion;

    std::int64_t at(int true_class, int predicted) const {
        return confusion[static_cast<std::size_t>(true_class) * class_count + predicted];
    }
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> log;
};

// -ln(probs[true_class]) with the probability clamped to >= 1e-12 before the
// log. Accumulated and returned in double even for float tensors.
template <typename T>
double cross_entropy_loss(const TensorT<T>& probs, int true_class) {
    if (probs.shape().rank() != 1)
        throw ShapeError("cross entropy: probabilities must be rank 1");
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= probs.size())
        throw ArgumentError("cross entropy: class " + std::to_string(true_class) +
                            " out of range for " + std::to_string(probs.size()) + " classes");
    const double p = std::max(static_cast<double>(probs[true_class]), 1e-12);
    return -std::log(p);
}

// dL/dprobs for the loss above: -1/p at the true class, 0 elsewhere.
// Composed with softmax_backward this yields probs - one_hot(true_class).
template <typename T>
TensorT<T> cross_entropy_grad(const TensorT<T>& probs, int true_class) {
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= probs.size())
        throw ArgumentError("cross entropy: class " + std::to_string(true_class) +
                            " out of range for " + std::to_string(probs.size()) + " classes");
    TensorT<T> grad(probs.shape());
    const double p = std::max(static_cast<double>(probs[true_class]), 1e-12);
    grad[true_class] = static_cast<T>(-1.0 / p);
    return grad;
}

// Momentum SGD update: v <- momentum * v - lr * g; p <- p + v.
// With momentum 0 this is plain p <- p - lr * g.
template <typename T>
void sgd_step(TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& velocity, T lr, T momentum) {
    if (param.shape() != grad.shape() || param.shape() != velocity.shape())
        throw ShapeError("sgd: param/grad/velocity shapes differ");
    T* p = param.data();
    const T* g = grad.data();
    T* v = velocity.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        v[i] = momentum * v[i] - lr * g[i];
        p[i] += v[i];
    }
}

// Builds the report from per-example predictions. Per-class precision or
// recall with an empty denominator contributes 0.
EvalReport report_from_predictions(std::span<const int> true_classes,
                                   std::span<const int> predicted, double mean_loss,
                                   int class_count);

// Full forward pass over the dataset. Examples are scored in parallel; the
// loss is accumulated in 64-bit fixed point, so the report is identical for
// any thread count and any dataset permutation.
EvalReport evaluate(const Model& model, std::span<const LabeledExample> data);

// Mini-batch SGD for config.epochs epochs. Per epoch: seeded shuffle into
// batches (last partial batch included), mean-gradient step per batch, then
// a full evaluation on both splits for the log. All randomness derives from
// config.seed, so equal seeds give bit-identical logs and parameters.
// Throws DivergenceError naming the epoch and batch if the loss goes
// non-finite.
TrainResult train(Model model, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> test_set, const TrainConfig& config);

// CSV rows "epoch,train_loss,train_acc,test_loss,test_acc", 6 decimals.
std::string training_log_csv(std::span<const EpochStats> log);
void write_training_log(const std::filesystem::path& path, std::span<const EpochStats> log);

}  // namespace dcnn
