#pragma once

#include <cstdint>
#include <vector>

#include "dcnn/tensor.hpp"

namespace dcnn {

// 8-bit raster, 1 channel (gray) or 3 channels (RGB), row-major.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int y, int x, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Pixels below this are treated as background after inversion (about 10% of
// full scale). Configurable on the ops that use it.
inline constexpr std::uint8_t kBackgroundThreshold = 26;

// RGB to gray by broadcast luminance 0.299 R + 0.587 G + 0.114 B, rounded
// half-up. Gray input passes through unchanged.
RawImage to_grayscale(const RawImage& img);

// 255 - pixel. Turns dark ink on a light page into a bright letter on a
// dark backdrop.
RawImage invert(const RawImage& img);

// Pixels below the threshold drop to exactly 0; the rest are untouched.
// Expects an already inverted image (ink bright).
RawImage suppress_background(const RawImage& img, std::uint8_t threshold = kBackgroundThreshold);

// 28x28 content centered in a 32x32 frame with a 2-pixel zero border.
RawImage pad_to_32(const RawImage& img);

// Bytes to a height x width x 1 tensor in [0,1] (value / 255).
Tensor normalize(const RawImage& img);

// Full pipeline. Raw 28x28 scans go through grayscale -> invert ->
// suppress_background -> pad_to_32 -> normalize; 32x32 images that were
// already inverted and padded (the published dataset form) only get
// grayscale -> normalize. Any other size is an error.
Tensor preprocess(const RawImage& img, bool already_processed,
                  std::uint8_t threshold = kBackgroundThreshold);

}  // namespace dcnn
