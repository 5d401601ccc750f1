#include "dcnn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dcnn/rng.hpp"

namespace dcnn {

namespace fs = std::filesystem;

namespace {

bool has_pgm_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pgm";
}

}  // namespace

LoadedDataset load_dataset(const fs::path& root, bool already_processed, const DecodeHook& hook) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw ArgumentError("dataset root " + root.string() + " is not a directory");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (class_dirs.empty())
        throw ArgumentError("dataset root " + root.string() + " has no class directories");

    LoadedDataset ds;
    struct FileEntry {
        fs::path path;
        int class_index;
    };
    std::vector<FileEntry> files;
    for (std::size_t ci = 0; ci < class_dirs.size(); ++ci) {
        ds.class_names.push_back(class_dirs[ci].filename().string());
        std::vector<fs::path> in_class;
        for (const auto& entry : fs::directory_iterator(class_dirs[ci]))
            if (entry.is_regular_file()) in_class.push_back(entry.path());
        std::sort(in_class.begin(), in_class.end());
        for (auto& p : in_class) files.push_back({std::move(p), static_cast<int>(ci)});
    }

    // decode in parallel, merge in sorted-path order
    std::vector<std::optional<LabeledExample>> slots(files.size());
    std::vector<std::optional<LoadIssue>> issues(files.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(files.size()); ++i) {
        const FileEntry& fe = files[static_cast<std::size_t>(i)];
        try {
            std::optional<RawImage> raw;
            if (has_pgm_extension(fe.path)) {
                raw = read_pgm(fe.path);
            } else if (hook) {
                raw = hook(fe.path);
            }
            if (!raw) {
                issues[i] = LoadIssue{fe.path, "unsupported file type"};
                continue;
            }
            slots[i] = LabeledExample{preprocess(*raw, already_processed), fe.class_index};
        } catch (const Error& e) {
            issues[i] = LoadIssue{fe.path, e.what()};
        }
    }

    for (std::size_t i = 0; i < files.size(); ++i) {
        if (slots[i])
            ds.examples.push_back(std::move(*slots[i]));
        else if (issues[i])
            ds.report.skipped.push_back(std::move(*issues[i]));
    }
    ds.report.loaded = ds.examples.size();
    if (ds.examples.empty())
        throw ArgumentError("dataset root " + root.string() + " contains no decodable images (" +
                            std::to_string(ds.report.skipped.size()) + " skipped)");
    return ds;
}

DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           std::vector<std::string> class_names, double ratio, std::uint64_t seed,
                           bool stratified) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ArgumentError("split: ratio must be in (0,1), got " + std::to_string(ratio));
    if (examples.empty()) throw ArgumentError("split: no examples");

    DatasetSplit split;
    split.class_names = std::move(class_names);
    Rng rng(seed);

    if (!stratified) {
        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        const std::size_t n_train = static_cast<std::size_t>(
            std::floor(ratio * static_cast<double>(order.size())));
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < n_train ? split.train : split.test).push_back(std::move(examples[order[i]]));
        return split;
    }

    const int classes = static_cast<int>(split.class_names.size());
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const int c = examples[i].class_index;
        if (c < 0 || c >= classes)
            throw ArgumentError("split: class index " + std::to_string(c) +
                                " outside class list of size " + std::to_string(classes));
        by_class[c].push_back(i);
    }
    for (int c = 0; c < classes; ++c)
        if (by_class[c].empty())
            throw ArgumentError("split: class " + split.class_names[c] +
                                " has no examples; stratified split needs every class populated");

    for (int c = 0; c < classes; ++c) {
        auto& idx = by_class[c];
        rng.shuffle(idx);
        const std::size_t n_train =
            static_cast<std::size_t>(std::floor(ratio * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? split.train : split.test).push_back(std::move(examples[idx[i]]));
    }
    return split;
}

std::vector<std::vector<std::size_t>> batches(std::size_t example_count, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch,
                                              bool shuffle) {
    if (batch_size < 1) throw ArgumentError("batches: batch size must be >= 1");
    std::vector<std::size_t> order(example_count);
    for (std::size_t i = 0; i < example_count; ++i) order[i] = i;
    if (shuffle) {
        Rng rng(mix_seed(seed, epoch));
        rng.shuffle(order);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < example_count; start += batch_size) {
        const std::size_t end = std::min(example_count, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace dcnn
