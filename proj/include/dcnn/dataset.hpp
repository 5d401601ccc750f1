#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcnn/pgm.hpp"
#include "dcnn/preprocess.hpp"
#include "dcnn/tensor.hpp"

namespace dcnn {

struct LabeledExample {
    Tensor image;  // 32x32x1, values in [0,1]
    int class_index = 0;
};

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
    std::vector<std::string> class_names;
};

struct LoadIssue {
    std::filesystem::path path;
    std::string reason;
};

// One bad scan must not abort a 61k-image ingest; skipped files are
// collected here so the caller can report them.
struct LoadReport {
    std::size_t loaded = 0;
    std::vector<LoadIssue> skipped;
};

// Optional decoder for formats beyond PGM; return nullopt to fall through to
// skip-with-report.
using DecodeHook = std::function<std::optional<RawImage>(const std::filesystem::path&)>;

struct LoadedDataset {
    std::vector<LabeledExample> examples;
    std::vector<std::string> class_names;
    LoadReport report;
};

// Loads a <root>/<class_name>/<image>.pgm tree. Class names are the directory
// names in lexicographic byte order and the class index is the position in
// that list. Every image runs through preprocess(). Decoding is parallel
// across files; results keep sorted-path order, so parallelism never changes
// the dataset ordering.
LoadedDataset load_dataset(const std::filesystem::path& root, bool already_processed,
                           const DecodeHook& hook = {});

// Seeded stratified split: per class, shuffle and send the first
// floor(ratio * n) examples to train, the rest to test. Deterministic given
// the seed; train and test are disjoint by construction.
DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           std::vector<std::string> class_names, double ratio, std::uint64_t seed,
                           bool stratified = true);

// Mini-batch index partition for one epoch. The shuffle is seeded with
// (seed, epoch), so a given epoch's batch order is reproducible; every index
// appears exactly once. The final batch may be smaller.
std::vector<std::vector<std::size_t>> batches(std::size_t example_count, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch,
                                              bool shuffle = true);

}  // namespace dcnn
