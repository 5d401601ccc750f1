#include "dcnn/pgm.hpp"

#include <fstream>
#include <string>

namespace dcnn {

namespace {

// Skips whitespace and '#' comments (which run to end of line).
void skip_separators(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            ++pos;
        } else {
            break;
        }
    }
}

long parse_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* field) {
    skip_separators(bytes, pos);
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
        throw FormatError(std::string("pgm: missing ") + field);
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1'000'000) throw FormatError(std::string("pgm: ") + field + " out of range");
        ++pos;
    }
    return v;
}

}  // namespace

RawImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw FormatError("pgm: bad magic, expected P5");
    std::size_t pos = 2;
    const long w = parse_int(bytes, pos, "width");
    const long h = parse_int(bytes, pos, "height");
    const long maxval = parse_int(bytes, pos, "maxval");
    if (w < 1 || h < 1) throw FormatError("pgm: non-positive dimensions");
    if (maxval != 255)
        throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval));
    if (pos >= bytes.size()) throw FormatError("pgm: missing pixel data");
    ++pos;  // single whitespace byte after maxval

    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < need)
        throw FormatError("pgm: truncated pixel data, expected " + std::to_string(need) +
                          " bytes, got " + std::to_string(bytes.size() - pos));
    RawImage img{static_cast<int>(w), static_cast<int>(h), 1, {}};
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return img;
}

RawImage read_pgm(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_pgm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_pgm(const RawImage& img) {
    if (img.channels != 1) throw FormatError("pgm: only 1-channel images can be encoded");
    if (img.width < 1 || img.height < 1) throw FormatError("pgm: empty image");
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

void write_pgm(const std::filesystem::path& path, const RawImage& img) {
    const std::vector<std::uint8_t> bytes = encode_pgm(img);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path.string());
    file.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IoError("short write to " + path.string());
}

}  // namespace dcnn
