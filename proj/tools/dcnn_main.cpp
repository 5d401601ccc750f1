// dcnn: train and evaluate the from-scratch Devanagari character CNN.
//
// Subcommands: train, eval, predict, inspect, preprocess. Exit codes:
// 0 success, 1 operational error, 2 usage error. Errors go to stderr as one
// structured line; data goes to stdout. Every run echoes its fully resolved
// configuration (seed included) before acting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcnn/model_io.hpp"
#include "dcnn/runtime.hpp"
#include "dcnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void echo_config(const json& resolved) { std::cout << "config: " << resolved.dump() << "\n"; }

void print_report(const std::string& tag, const dcnn::EvalReport& report, bool confusion) {
    std::cout << tag << "loss " << fmt6(report.loss) << "\n"
              << tag << "accuracy " << fmt6(report.accuracy) << "\n"
              << tag << "macro_precision " << fmt6(report.macro_precision) << "\n"
              << tag << "macro_recall " << fmt6(report.macro_recall) << "\n";
    if (confusion) {
        std::cout << tag << "confusion (rows = true class, cols = predicted)\n";
        for (int t = 0; t < report.class_count; ++t) {
            for (int p = 0; p < report.class_count; ++p)
                std::cout << (p ? " " : "") << report.at(t, p);
            std::cout << "\n";
        }
    }
}

void report_skips(const dcnn::LoadReport& report) {
    if (report.skipped.empty()) return;
    std::cerr << "warning: skipped " << report.skipped.size() << " file(s):\n";
    for (const auto& issue : report.skipped)
        std::cerr << "  " << issue.path.string() << ": " << issue.reason << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string data_dir;
    std::string out_path;
    std::string log_path;
    std::string config_path;
    dcnn::TrainConfig config;
    double split_ratio = 0.8;
    bool already_processed = false;
    std::vector<dcnn::LayerSpec> architecture;  // empty = reference model
};

int run_train(TrainOptions& opt, const json& resolved) {
    echo_config(resolved);

    auto loaded = dcnn::load_dataset(opt.data_dir, opt.already_processed);
    report_skips(loaded.report);
    const int classes = static_cast<int>(loaded.class_names.size());
    auto split = dcnn::split_dataset(std::move(loaded.examples), loaded.class_names,
                                     opt.split_ratio, opt.config.seed);
    std::cout << "dataset: " << split.train.size() << " train / " << split.test.size()
              << " test, " << classes << " classes\n";

    dcnn::Model model =
        opt.architecture.empty()
            ? dcnn::assemble_reference_model(opt.config.seed, classes)
            : dcnn::assemble_model(dcnn::Shape{32, 32, 1}, classes, opt.architecture,
                                   opt.config.seed);
    model.class_names = split.class_names;

    dcnn::TrainResult result = dcnn::train(std::move(model), split.train, split.test, opt.config);
    for (const auto& row : result.log)
        std::cout << "epoch " << row.epoch << ": train_loss " << fmt6(row.train_loss)
                  << " train_acc " << fmt6(row.train_acc) << " test_loss " << fmt6(row.test_loss)
                  << " test_acc " << fmt6(row.test_acc) << "\n";

    if (!opt.log_path.empty()) dcnn::write_training_log(opt.log_path, result.log);
    if (!opt.out_path.empty()) dcnn::save_model(result.model, opt.out_path);

    print_report("test_", dcnn::evaluate(result.model, split.test), false);
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string data_dir;
    std::string model_path;
    bool already_processed = false;
    bool confusion = false;
    std::string part = "all";  // all | train | test (reconstructs the split)
    double split_ratio = 0.8;
    std::uint64_t seed = 42;
};

int run_eval(EvalOptions& opt, const json& resolved) {
    echo_config(resolved);

    const dcnn::Model model = dcnn::load_model(opt.model_path);
    auto loaded = dcnn::load_dataset(opt.data_dir, opt.already_processed);
    report_skips(loaded.report);
    if (static_cast<int>(loaded.class_names.size()) != model.class_count) {
        std::cerr << "error: model expects " << model.class_count << " classes, dataset at "
                  << opt.data_dir << " has " << loaded.class_names.size() << "\n";
        return 1;
    }

    dcnn::EvalReport report;
    if (opt.part == "all") {
        report = dcnn::evaluate(model, loaded.examples);
    } else {
        auto split = dcnn::split_dataset(std::move(loaded.examples), loaded.class_names,
                                         opt.split_ratio, opt.seed);
        report = dcnn::evaluate(model, opt.part == "train" ? split.train : split.test);
    }
    print_report("", report, opt.confusion);
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int run_predict(const std::string& model_path, const std::string& image_path, int top_k,
                const json& resolved) {
    echo_config(resolved);

    const dcnn::Model model = dcnn::load_model(model_path);
    const dcnn::RawImage raw = dcnn::read_pgm(image_path);
    const bool already = raw.width == 32 && raw.height == 32;
    const dcnn::Tensor image = dcnn::preprocess(raw, already);

    const dcnn::Tensor probs = dcnn::model_forward(model, image);
    std::vector<int> order(probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });

    const int k = std::min<int>(top_k, static_cast<int>(probs.size()));
    for (int i = 0; i < k; ++i)
        std::cout << model.class_names[order[i]] << " " << fmt6(probs[order[i]]) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

int run_inspect(const std::string& model_path, bool arch_default, const json& resolved) {
    echo_config(resolved);

    const dcnn::Model model =
        arch_default ? dcnn::assemble_reference_model(0) : dcnn::load_model(model_path);
    const auto shapes = dcnn::chain_shapes(model);

    std::printf("%-28s %-12s %10s\n", "layer", "output", "params");
    std::printf("%-28s %-12s %10d\n", "input", model.input_shape.to_string().c_str(), 0);
    std::int64_t total = 0;
    dcnn::Shape cur = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const std::int64_t params = dcnn::layer_param_count(model.layers[i], cur);
        total += params;
        std::printf("%-28s %-12s %10lld\n", dcnn::layer_name(model.layers[i]).c_str(),
                    shapes[i].to_string().c_str(), static_cast<long long>(params));
        cur = shapes[i];
    }
    std::printf("%-28s %-12s %10lld\n", "total", "", static_cast<long long>(total));
    return 0;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessOptions {
    std::string in_dir;
    std::string out_dir;
    bool verify = false;
    bool strict = false;
    int threshold = dcnn::kBackgroundThreshold;
};

std::vector<std::pair<fs::path, fs::path>> walk_tree(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw dcnn::ArgumentError("input " + root.string() + " is not a directory");
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty())
        throw dcnn::ArgumentError("input " + root.string() + " has no class directories");

    std::vector<std::pair<fs::path, fs::path>> files;  // (class dir, file)
    for (const auto& dir : class_dirs) {
        std::vector<fs::path> in_class;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) in_class.push_back(entry.path());
        std::sort(in_class.begin(), in_class.end());
        for (auto& f : in_class) files.emplace_back(dir, std::move(f));
    }
    return files;
}

int run_preprocess(PreprocessOptions& opt, const json& resolved) {
    echo_config(resolved);
    const auto threshold = static_cast<std::uint8_t>(opt.threshold);
    const auto files = walk_tree(opt.in_dir);

    std::size_t failures = 0;
    std::size_t processed = 0;

    if (opt.verify) {
        for (const auto& [dir, file] : files) {
            try {
                const dcnn::RawImage img = dcnn::read_pgm(file);
                std::vector<std::string> problems;
                if (img.width != 32 || img.height != 32) {
                    problems.push_back("size " + std::to_string(img.width) + "x" +
                                       std::to_string(img.height) + ", expected 32x32");
                } else {
                    int border_bad = 0, background_bad = 0;
                    for (int y = 0; y < 32; ++y)
                        for (int x = 0; x < 32; ++x) {
                            const std::uint8_t v = img.at(y, x);
                            const bool border = y < 2 || y >= 30 || x < 2 || x >= 30;
                            if (border && v != 0) ++border_bad;
                            if (v > 0 && v < threshold) ++background_bad;
                        }
                    if (border_bad)
                        problems.push_back(std::to_string(border_bad) + " nonzero border pixel(s)");
                    if (background_bad)
                        problems.push_back(std::to_string(background_bad) +
                                           " pixel(s) below the background threshold " +
                                           std::to_string(opt.threshold));
                }
                if (!problems.empty()) {
                    ++failures;
                    for (const auto& p : problems)
                        std::cout << file.string() << ": " << p << "\n";
                }
                ++processed;
            } catch (const dcnn::Error& e) {
                ++failures;
                std::cout << file.string() << ": " << e.what() << "\n";
            }
        }
        std::cout << "verified " << processed << " file(s), " << failures << " with violations\n";
    } else {
        if (opt.out_dir.empty())
            throw dcnn::ArgumentError("preprocess: --out is required unless --verify is given");
        for (const auto& [dir, file] : files) {
            try {
                const dcnn::RawImage raw = dcnn::read_pgm(file);
                const bool already = raw.width == 32 && raw.height == 32;
                const dcnn::Tensor t = dcnn::preprocess(raw, already, threshold);

                dcnn::RawImage out{32, 32, 1, std::vector<std::uint8_t>(32 * 32)};
                for (std::size_t i = 0; i < out.pixels.size(); ++i)
                    out.pixels[i] = static_cast<std::uint8_t>(std::lround(t[i] * 255.0f));

                const fs::path out_class = fs::path(opt.out_dir) / dir.filename();
                fs::create_directories(out_class);
                dcnn::write_pgm(out_class / (file.stem().string() + ".pgm"), out);
                ++processed;
            } catch (const dcnn::Error& e) {
                ++failures;
                std::cerr << "skip " << file.string() << ": " << e.what() << "\n";
            }
        }
        std::cout << "wrote " << processed << " file(s), skipped " << failures << "\n";
    }
    return (opt.strict && failures > 0) ? 1 : 0;
}

// ---------------------------------------------------------------------------

// pulls TrainConfig and architecture overrides from a JSON config file;
// command-line flags override anything set here
void apply_config_file(TrainOptions& opt) {
    std::ifstream file(opt.config_path);
    if (!file) throw dcnn::IoError("cannot open config file " + opt.config_path);
    json j;
    try {
        j = json::parse(file);
    } catch (const json::exception& e) {
        throw dcnn::FormatError("config file " + opt.config_path + ": " + e.what());
    }
    if (j.contains("epochs")) opt.config.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) opt.config.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) opt.config.learning_rate = j["learning_rate"].get<float>();
    if (j.contains("momentum")) opt.config.momentum = j["momentum"].get<float>();
    if (j.contains("seed")) opt.config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("shuffle_each_epoch"))
        opt.config.shuffle_each_epoch = j["shuffle_each_epoch"].get<bool>();
    if (j.contains("split")) opt.split_ratio = j["split"].get<double>();
    if (j.contains("architecture")) {
        const auto& arch = j["architecture"];
        if (!arch.is_object() || !arch.contains("layers"))
            throw dcnn::FormatError("config file: architecture needs a 'layers' array");
        opt.architecture = dcnn::layers_from_json(arch["layers"]);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"from-scratch CNN for 36-class Devanagari handwritten character recognition"};
    app.require_subcommand(1);

    int threads = 0;
    bool serial = false;
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_flag("--serial", serial, "use the serial reference kernels");

    TrainOptions train_opt;
    auto* cmd_train = app.add_subcommand("train", "train a model on a class-per-directory tree");
    cmd_train->add_option("--data", train_opt.data_dir, "dataset root")->required();
    cmd_train->add_option("--out", train_opt.out_path, "output model file");
    auto* o_epochs = cmd_train->add_option("--epochs", train_opt.config.epochs, "epochs");
    auto* o_batch = cmd_train->add_option("--batch", train_opt.config.batch_size, "batch size");
    auto* o_lr = cmd_train->add_option("--lr", train_opt.config.learning_rate, "learning rate");
    auto* o_mom = cmd_train->add_option("--momentum", train_opt.config.momentum, "momentum");
    auto* o_seed = cmd_train->add_option("--seed", train_opt.config.seed, "seed");
    auto* o_split = cmd_train->add_option("--split", train_opt.split_ratio, "train ratio");
    cmd_train->add_flag("--already-processed", train_opt.already_processed,
                        "images are already inverted and padded to 32x32");
    cmd_train->add_option("--log", train_opt.log_path, "per-epoch CSV log");
    cmd_train->add_option("--config", train_opt.config_path,
                          "JSON config (flags override file values)");

    EvalOptions eval_opt;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a model on a dataset");
    cmd_eval->add_option("--data", eval_opt.data_dir, "dataset root")->required();
    cmd_eval->add_option("--model", eval_opt.model_path, "model file")->required();
    cmd_eval->add_flag("--already-processed", eval_opt.already_processed,
                       "images are already inverted and padded to 32x32");
    cmd_eval->add_flag("--confusion", eval_opt.confusion, "print the confusion matrix");
    cmd_eval->add_option("--part", eval_opt.part, "all|train|test (reconstructs the split)")
        ->check(CLI::IsMember({"all", "train", "test"}));
    cmd_eval->add_option("--split", eval_opt.split_ratio, "train ratio for --part");
    cmd_eval->add_option("--seed", eval_opt.seed, "split seed for --part");

    std::string predict_model, predict_image;
    int predict_top = 3;
    auto* cmd_predict = app.add_subcommand("predict", "classify a single image");
    cmd_predict->add_option("--model", predict_model, "model file")->required();
    cmd_predict->add_option("--image", predict_image, "28x28 or 32x32 PGM image")->required();
    cmd_predict->add_option("--top", predict_top, "top-K classes to print")
        ->check(CLI::PositiveNumber);

    std::string inspect_model;
    bool inspect_default = false;
    auto* cmd_inspect = app.add_subcommand("inspect", "per-layer shapes and parameter counts");
    cmd_inspect->add_option("--model", inspect_model, "model file");
    cmd_inspect->add_flag("--arch-default", inspect_default, "inspect the reference architecture");

    PreprocessOptions pre_opt;
    auto* cmd_pre = app.add_subcommand("preprocess", "run the image pipeline over a tree");
    cmd_pre->add_option("--in", pre_opt.in_dir, "input tree")->required();
    cmd_pre->add_option("--out", pre_opt.out_dir, "output tree (transform mode)");
    cmd_pre->add_flag("--verify", pre_opt.verify, "check an already-processed tree instead");
    cmd_pre->add_flag("--strict", pre_opt.strict, "exit 1 if any file fails");
    cmd_pre->add_option("--threshold", pre_opt.threshold, "background threshold")
        ->check(CLI::Range(0, 255));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    dcnn::runtime::set_threads(threads);
    if (serial) dcnn::runtime::set_mode(dcnn::runtime::Mode::serial);

    try {
        if (cmd_train->parsed()) {
            // defaults <- config file <- explicit flags
            const dcnn::TrainConfig from_flags = train_opt.config;
            const double split_from_flags = train_opt.split_ratio;
            if (!train_opt.config_path.empty()) apply_config_file(train_opt);
            if (o_epochs->count()) train_opt.config.epochs = from_flags.epochs;
            if (o_batch->count()) train_opt.config.batch_size = from_flags.batch_size;
            if (o_lr->count()) train_opt.config.learning_rate = from_flags.learning_rate;
            if (o_mom->count()) train_opt.config.momentum = from_flags.momentum;
            if (o_seed->count()) train_opt.config.seed = from_flags.seed;
            if (o_split->count()) train_opt.split_ratio = split_from_flags;

            json resolved{{"command", "train"},
                          {"data", train_opt.data_dir},
                          {"out", train_opt.out_path},
                          {"log", train_opt.log_path},
                          {"epochs", train_opt.config.epochs},
                          {"batch_size", train_opt.config.batch_size},
                          {"learning_rate", train_opt.config.learning_rate},
                          {"momentum", train_opt.config.momentum},
                          {"seed", train_opt.config.seed},
                          {"shuffle_each_epoch", train_opt.config.shuffle_each_epoch},
                          {"split", train_opt.split_ratio},
                          {"already_processed", train_opt.already_processed},
                          {"architecture", train_opt.architecture.empty() ? "reference" : "config"},
                          {"threads", threads},
                          {"serial", serial}};
            return run_train(train_opt, resolved);
        }
        if (cmd_eval->parsed()) {
            json resolved{{"command", "eval"},
                          {"data", eval_opt.data_dir},
                          {"model", eval_opt.model_path},
                          {"part", eval_opt.part},
                          {"split", eval_opt.split_ratio},
                          {"seed", eval_opt.seed},
                          {"already_processed", eval_opt.already_processed},
                          {"threads", threads},
                          {"serial", serial}};
            return run_eval(eval_opt, resolved);
        }
        if (cmd_predict->parsed()) {
            json resolved{{"command", "predict"},
                          {"model", predict_model},
                          {"image", predict_image},
                          {"top", predict_top}};
            return run_predict(predict_model, predict_image, predict_top, resolved);
        }
        if (cmd_inspect->parsed()) {
            if (!inspect_default && inspect_model.empty()) {
                std::cerr << "error: inspect needs --model or --arch-default\n";
                return 2;
            }
            json resolved{{"command", "inspect"},
                          {"model", inspect_default ? "arch-default" : inspect_model}};
            return run_inspect(inspect_model, inspect_default, resolved);
        }
        if (cmd_pre->parsed()) {
            json resolved{{"command", "preprocess"}, {"in", pre_opt.in_dir},
                          {"out", pre_opt.out_dir},  {"verify", pre_opt.verify},
                          {"strict", pre_opt.strict}, {"threshold", pre_opt.threshold}};
            return run_preprocess(pre_opt, resolved);
        }
    } catch (const dcnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
