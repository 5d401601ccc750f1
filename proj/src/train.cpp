#include "dcnn/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcnn {

namespace {

// Loss sums use 32.32 fixed point: integer addition commutes, so totals do
// not depend on summation order (thread count, dataset permutation).
constexpr double kLossScale = 4294967296.0;  // 2^32

// callers must reject non-finite losses first; llround of NaN is undefined
std::int64_t to_fixed(double loss) {
    return static_cast<std::int64_t>(std::llround(loss * kLossScale));
}

double from_fixed(std::int64_t total, std::size_t n) {
    return static_cast<double>(total) / kLossScale / static_cast<double>(n);
}

int argmax_index(const Tensor& probs) {
    int best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ArgumentError("train config: epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("train config: batch size must be >= 1");
    if (learning_rate < 0.0f) throw ArgumentError("train config: learning rate must be >= 0");
    if (momentum < 0.0f || momentum >= 1.0f)
        throw ArgumentError("train config: momentum must be in [0,1)");
}

EvalReport report_from_predictions(std::span<const int> true_classes,
                                   std::span<const int> predicted, double mean_loss,
                                   int class_count) {
    if (true_classes.size() != predicted.size())
        throw ArgumentError("report: prediction and label counts differ");
    if (true_classes.empty()) throw ArgumentError("report: no examples");

    EvalReport report;
    report.class_count = class_count;
    report.loss = mean_loss;
    report.confusion.assign(static_cast<std::size_t>(class_count) * class_count, 0);
    for (std::size_t i = 0; i < true_classes.size(); ++i)
        ++report.confusion[static_cast<std::size_t>(true_classes[i]) * class_count + predicted[i]];

    std::int64_t trace = 0;
    double precision_sum = 0.0;
    double recall_sum = 0.0;
    for (int c = 0; c < class_count; ++c) {
        const std::int64_t tp = report.at(c, c);
        trace += tp;
        std::int64_t col = 0;  // tp + fp: everything predicted as c
        std::int64_t row = 0;  // tp + fn: everything truly c
        for (int o = 0; o < class_count; ++o) {
            col += report.at(o, c);
            row += report.at(c, o);
        }
        precision_sum += col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        recall_sum += row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    }
    report.accuracy = static_cast<double>(trace) / static_cast<double>(true_classes.size());
    report.macro_precision = precision_sum / class_count;
    report.macro_recall = recall_sum / class_count;
    return report;
}

EvalReport evaluate(const Model& model, std::span<const LabeledExample> data) {
    if (data.empty()) throw ArgumentError("evaluate: empty dataset");
    const std::size_t n = data.size();
    std::vector<int> predicted(n);
    std::vector<int> labels(n);
    std::vector<std::int64_t> loss_fp(n);
    std::vector<std::uint8_t> finite(n, 1);

#pragma omp parallel for schedule(static) if (runtime::parallel_enabled())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const LabeledExample& ex = data[static_cast<std::size_t>(i)];
        const Tensor probs = model_forward(model, ex.image);
        predicted[i] = argmax_index(probs);
        labels[i] = ex.class_index;
        const double loss = cross_entropy_loss(probs, ex.class_index);
        finite[i] = std::isfinite(loss) ? 1 : 0;
        loss_fp[i] = finite[i] ? to_fixed(loss) : 0;
    }

    std::int64_t total = 0;
    bool all_finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        total += loss_fp[i];
        all_finite = all_finite && finite[i];
    }
    const double mean_loss =
        all_finite ? from_fixed(total, n) : std::numeric_limits<double>::quiet_NaN();
    return report_from_predictions(labels, predicted, mean_loss, model.class_count);
}

TrainResult train(Model model, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> test_set, const TrainConfig& config) {
    config.validate();
    if (train_set.empty()) throw ArgumentError("train: empty training set");
    if (test_set.empty()) throw ArgumentError("train: empty test set");
    for (const auto& ex : train_set)
        if (ex.class_index < 0 || ex.class_index >= model.class_count)
            throw ArgumentError("train: class index " + std::to_string(ex.class_index) +
                                " outside the model's " + std::to_string(model.class_count) +
                                " classes");

    std::vector<LayerParams> velocity = make_grad_buffers(model);
    std::vector<LayerParams> accum = make_grad_buffers(model);

    // per-example gradient slots; reduced in example order so the result is
    // independent of the thread count
    const std::size_t max_batch =
        std::min<std::size_t>(config.batch_size, train_set.size());
    std::vector<std::vector<LayerParams>> slots(max_batch);
    for (auto& s : slots) s = make_grad_buffers(model);
    std::vector<std::int64_t> loss_fp(max_batch);
    std::vector<std::uint8_t> finite(max_batch, 1);

    TrainResult result;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto batch_list = batches(train_set.size(), config.batch_size, config.seed,
                                        static_cast<std::uint64_t>(epoch - 1),
                                        config.shuffle_each_epoch);
        int batch_no = 0;
        for (const auto& batch : batch_list) {
            ++batch_no;
            const std::size_t bsz = batch.size();

#pragma omp parallel for schedule(static) if (runtime::parallel_enabled())
            for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(bsz); ++bi) {
                const LabeledExample& ex = train_set[batch[static_cast<std::size_t>(bi)]];
                ForwardTrace trace;
                const Tensor probs = model_forward(model, ex.image, &trace);
                const double loss = cross_entropy_loss(probs, ex.class_index);
                finite[bi] = std::isfinite(loss) ? 1 : 0;
                loss_fp[bi] = finite[bi] ? to_fixed(loss) : 0;
                const Tensor grad_probs = cross_entropy_grad(probs, ex.class_index);
                model_backward(model, trace, grad_probs, slots[static_cast<std::size_t>(bi)]);
            }

            for (std::size_t bi = 0; bi < bsz; ++bi)
                if (!finite[bi])
                    throw DivergenceError(epoch, batch_no,
                                          "training diverged: non-finite loss at epoch " +
                                              std::to_string(epoch) + ", batch " +
                                              std::to_string(batch_no));

            // mean gradient: reduction over the batch in example order, then
            // scale. Parallel threads own disjoint parameter ranges and each
            // element sums examples in ascending order, so the result is
            // bit-identical to the serial loop.
            const float inv = 1.0f / static_cast<float>(bsz);
            for (std::size_t li = 0; li < accum.size(); ++li) {
                auto reduce = [&](Tensor& dst, auto get) {
                    if (dst.empty()) return;
                    float* d = dst.data();
                    const std::size_t sz = dst.size();
#pragma omp parallel if (runtime::parallel_enabled() && sz > 4096)
                    {
                        std::size_t lo = 0, hi = sz;
#ifdef _OPENMP
                        const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
                        const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
                        lo = sz * tid / nt;
                        hi = sz * (tid + 1) / nt;
#endif
                        for (std::size_t k = lo; k < hi; ++k) d[k] = 0.0f;
                        for (std::size_t bi = 0; bi < bsz; ++bi) {
                            const float* s = get(slots[bi][li]).data();
                            for (std::size_t k = lo; k < hi; ++k) d[k] += s[k];
                        }
                        for (std::size_t k = lo; k < hi; ++k) d[k] *= inv;
                    }
                };
                reduce(accum[li].weights, [](const LayerParams& p) -> const Tensor& {
                    return p.weights;
                });
                reduce(accum[li].biases, [](const LayerParams& p) -> const Tensor& {
                    return p.biases;
                });
            }

            for (std::size_t li = 0; li < model.params.size(); ++li) {
                if (!model.params[li].weights.empty())
                    sgd_step(model.params[li].weights, accum[li].weights, velocity[li].weights,
                             config.learning_rate, config.momentum);
                if (!model.params[li].biases.empty())
                    sgd_step(model.params[li].biases, accum[li].biases, velocity[li].biases,
                             config.learning_rate, config.momentum);
            }
        }

        const EvalReport on_train = evaluate(model, train_set);
        const EvalReport on_test = evaluate(model, test_set);
        result.log.push_back({epoch, on_train.loss, on_train.accuracy, on_test.loss,
                              on_test.accuracy});
    }
    result.model = std::move(model);
    return result;
}

std::string training_log_csv(std::span<const EpochStats> log) {
    std::string out = "epoch,train_loss,train_acc,test_loss,test_acc\n";
    char line[160];
    for (const auto& row : log) {
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", row.epoch, row.train_loss,
                      row.train_acc, row.test_loss, row.test_acc);
        out += line;
    }
    return out;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochStats> log) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("cannot write " + path.string());
    file << training_log_csv(log);
    if (!file) throw IoError("short write to " + path.string());
}

}  // namespace dcnn
