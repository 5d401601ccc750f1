#include "synthetic.hpp"

#include <cmath>

#include "dcnn/pgm.hpp"
#include "dcnn/rng.hpp"

namespace synthetic {

using dcnn::RawImage;
using dcnn::Rng;

namespace {

struct Jitter {
    double cx, cy;    // glyph center
    double span;      // half-extent
    double thick;     // stroke half-width
};

bool ink_at(int cls, double x, double y, const Jitter& j) {
    const double dx = x - j.cx;
    const double dy = y - j.cy;
    const double s = j.span;
    const double t = j.thick;
    switch (cls % kGlyphClasses) {
        case 0:  // horizontal bar
            return std::abs(dy) <= t && std::abs(dx) <= s;
        case 1:  // vertical bar
            return std::abs(dx) <= t && std::abs(dy) <= s;
        case 2:  // main diagonal
            return std::abs(dy - dx) <= 1.5 * t && std::abs(dx) <= s && std::abs(dy) <= s;
        case 3:  // anti-diagonal
            return std::abs(dy + dx) <= 1.5 * t && std::abs(dx) <= s && std::abs(dy) <= s;
        case 4:  // plus
            return (std::abs(dx) <= t && std::abs(dy) <= s) ||
                   (std::abs(dy) <= t && std::abs(dx) <= s);
        case 5:  // X
            return (std::abs(dy - dx) <= 1.5 * t || std::abs(dy + dx) <= 1.5 * t) &&
                   std::abs(dx) <= s && std::abs(dy) <= s;
        case 6:  // ring
            return std::abs(std::hypot(dx, dy) - (s - 1.0)) <= t;
        case 7:  // filled disc
            return std::hypot(dx, dy) <= s - 2.0;
        case 8:  // square outline
            return std::max(std::abs(dx), std::abs(dy)) <= s - 1.0 &&
                   std::max(std::abs(dx), std::abs(dy)) >= s - 1.0 - 2.0 * t;
        default:  // T shape
            return (std::abs(dy + s) <= t && std::abs(dx) <= s) ||
                   (std::abs(dx) <= t && dy >= -s && dy <= s);
    }
}

}  // namespace

RawImage render_glyph(int cls, std::uint64_t seed) {
    Rng rng(seed);
    Jitter j;
    j.cx = 13.5 + static_cast<double>(rng.below(5)) - 2.0;
    j.cy = 13.5 + static_cast<double>(rng.below(5)) - 2.0;
    j.span = 8.0 + 2.0 * rng.uniform01();
    j.thick = 1.3 + 0.8 * rng.uniform01();

    RawImage img{28, 28, 1, std::vector<std::uint8_t>(28 * 28)};
    for (int y = 0; y < 28; ++y)
        for (int x = 0; x < 28; ++x) {
            if (ink_at(cls, x, y, j)) {
                img.at(y, x) = static_cast<std::uint8_t>(10 + rng.below(41));  // dark ink
            } else {
                img.at(y, x) = static_cast<std::uint8_t>(230 + rng.below(26));  // light page
            }
        }
    return img;
}

dcnn::LoadedDataset make_glyph_dataset(int class_count, int per_class, std::uint64_t seed) {
    dcnn::LoadedDataset ds;
    for (int c = 0; c < class_count; ++c) {
        ds.class_names.push_back("glyph" + std::to_string(c));
        for (int i = 0; i < per_class; ++i) {
            const std::uint64_t s =
                dcnn::mix_seed(seed, static_cast<std::uint64_t>(c) * 1000003ULL + i);
            ds.examples.push_back({dcnn::preprocess(render_glyph(c, s), false), c});
        }
    }
    ds.report.loaded = ds.examples.size();
    return ds;
}

void write_glyph_tree(const std::filesystem::path& root, int class_count, int per_class,
                      std::uint64_t seed) {
    namespace fs = std::filesystem;
    for (int c = 0; c < class_count; ++c) {
        const fs::path dir = root / ("glyph" + std::to_string(c));
        fs::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            const std::uint64_t s =
                dcnn::mix_seed(seed, static_cast<std::uint64_t>(c) * 1000003ULL + i);
            dcnn::write_pgm(dir / (std::to_string(i) + ".pgm"), render_glyph(c, s));
        }
    }
}

double nearest_centroid_accuracy(const std::vector<dcnn::LabeledExample>& train,
                                 const std::vector<dcnn::LabeledExample>& test, int class_count) {
    const std::size_t dim = train.front().image.size();
    std::vector<std::vector<double>> centroid(class_count, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(class_count, 0);
    for (const auto& ex : train) {
        ++counts[ex.class_index];
        for (std::size_t i = 0; i < dim; ++i) centroid[ex.class_index][i] += ex.image[i];
    }
    for (int c = 0; c < class_count; ++c)
        for (auto& v : centroid[c]) v /= static_cast<double>(counts[c] ? counts[c] : 1);

    std::size_t correct = 0;
    for (const auto& ex : test) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < class_count; ++c) {
            double d = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double diff = centroid[c][i] - ex.image[i];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == ex.class_index) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace synthetic
