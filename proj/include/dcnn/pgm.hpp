#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dcnn/preprocess.hpp"

namespace dcnn {

// Binary PGM ("P5") with maxval 255. Header comments (#...) are accepted.
// Anything else is a FormatError naming the offending field.
RawImage decode_pgm(std::span<const std::uint8_t> bytes);
RawImage read_pgm(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_pgm(const RawImage& img);
void write_pgm(const std::filesystem::path& path, const RawImage& img);

}  // namespace dcnn
