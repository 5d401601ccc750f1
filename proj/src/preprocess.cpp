#include "dcnn/preprocess.hpp"

#include <cmath>
#include <string>

namespace dcnn {

RawImage to_grayscale(const RawImage& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3)
        throw FormatError("grayscale: expected 1 or 3 channels, got " +
                          std::to_string(img.channels));
    RawImage out{img.width, img.height, 1, {}};
    out.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const double r = img.pixels[i * 3];
        const double g = img.pixels[i * 3 + 1];
        const double b = img.pixels[i * 3 + 2];
        const double y = std::floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5);
        out.pixels[i] = static_cast<std::uint8_t>(y < 0 ? 0 : (y > 255 ? 255 : y));
    }
    return out;
}

RawImage invert(const RawImage& img) {
    if (img.channels != 1) throw FormatError("invert: expected a 1-channel image");
    RawImage out = img;
    for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
    return out;
}

RawImage suppress_background(const RawImage& img, std::uint8_t threshold) {
    if (img.channels != 1) throw FormatError("suppress_background: expected a 1-channel image");
    RawImage out = img;
    for (auto& p : out.pixels)
        if (p < threshold) p = 0;
    return out;
}

RawImage pad_to_32(const RawImage& img) {
    if (img.channels != 1) throw FormatError("pad: expected a 1-channel image");
    if (img.width != 28 || img.height != 28)
        throw ShapeError("pad: expected a 28x28 image, got " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
    RawImage out{32, 32, 1, std::vector<std::uint8_t>(32 * 32, 0)};
    for (int y = 0; y < 28; ++y)
        for (int x = 0; x < 28; ++x) out.at(y + 2, x + 2) = img.at(y, x);
    return out;
}

Tensor normalize(const RawImage& img) {
    if (img.channels != 1) throw FormatError("normalize: expected a 1-channel image");
    Tensor t(Shape{static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width), 1});
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        t[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    return t;
}

Tensor preprocess(const RawImage& img, bool already_processed, std::uint8_t threshold) {
    const RawImage gray = to_grayscale(img);
    if (already_processed) {
        if (gray.width != 32 || gray.height != 32)
            throw ShapeError("preprocess: already-processed images must be 32x32, got " +
                             std::to_string(gray.width) + "x" + std::to_string(gray.height));
        return normalize(gray);
    }
    if (gray.width != 28 || gray.height != 28)
        throw ShapeError("preprocess: expected 28x28 raw input (or 32x32 with "
                         "already_processed), got " +
                         std::to_string(gray.width) + "x" + std::to_string(gray.height));
    return normalize(pad_to_32(suppress_background(invert(gray), threshold)));
}

}  // namespace dcnn
