#include "dcnn/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dcnn {

using nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

// Payload order per layer: weights then biases. Conv filters with a
// connectivity table write only connected channels.
void pack_layer(std::vector<std::uint8_t>& out, const LayerSpec& spec, const LayerParams& p) {
    if (const auto* conv = std::get_if<Conv2DSpec>(&spec)) {
        for (int of = 0; of < conv->filters; ++of)
            for (int ky = 0; ky < conv->kernel; ++ky)
                for (int kx = 0; kx < conv->kernel; ++kx)
                    for (int ic = 0; ic < conv->in_channels; ++ic)
                        if (conv->connected(of, ic)) put_f32(out, p.weights.at(of, ky, kx, ic));
        for (float b : p.biases.values()) put_f32(out, b);
        return;
    }
    for (float w : p.weights.values()) put_f32(out, w);
    for (float b : p.biases.values()) put_f32(out, b);
}

void unpack_layer(const std::uint8_t*& cursor, const LayerSpec& spec, LayerParams& p) {
    if (const auto* conv = std::get_if<Conv2DSpec>(&spec)) {
        for (int of = 0; of < conv->filters; ++of)
            for (int ky = 0; ky < conv->kernel; ++ky)
                for (int kx = 0; kx < conv->kernel; ++kx)
                    for (int ic = 0; ic < conv->in_channels; ++ic)
                        if (conv->connected(of, ic)) {
                            p.weights.at(of, ky, kx, ic) = get_f32(cursor);
                            cursor += 4;
                        }
        for (auto& b : p.biases.values()) {
            b = get_f32(cursor);
            cursor += 4;
        }
        return;
    }
    for (auto& w : p.weights.values()) {
        w = get_f32(cursor);
        cursor += 4;
    }
    for (auto& b : p.biases.values()) {
        b = get_f32(cursor);
        cursor += 4;
    }
}

int require_int(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw FormatError(std::string("layer spec: missing integer field '") + key + "'");
    return j[key].get<int>();
}

}  // namespace

json layers_to_json(const std::vector<LayerSpec>& layers) {
    json out = json::array();
    for (const auto& layer : layers) {
        json j;
        if (const auto* conv = std::get_if<Conv2DSpec>(&layer)) {
            j["type"] = "conv";
            j["filters"] = conv->filters;
            j["kernel"] = conv->kernel;
            j["stride"] = conv->stride;
            j["pad"] = conv->pad;
            j["in_channels"] = conv->in_channels;
            if (!conv->connectivity.empty()) {
                json table = json::array();
                for (int of = 0; of < conv->filters; ++of) {
                    json row = json::array();
                    for (int ic = 0; ic < conv->in_channels; ++ic)
                        row.push_back(conv->connected(of, ic));
                    table.push_back(std::move(row));
                }
                j["connectivity"] = std::move(table);
            }
        } else if (const auto* pool = std::get_if<PoolSpec>(&layer)) {
            j["type"] = "maxpool";
            j["extent"] = pool->extent;
            j["stride"] = pool->stride;
            j["affine"] = pool->trainable_affine;
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            j["type"] = "dense";
            j["in"] = dense->in_features;
            j["out"] = dense->out_features;
        } else if (std::holds_alternative<ReluSpec>(layer)) {
            j["type"] = "relu";
        } else if (std::holds_alternative<FlattenSpec>(layer)) {
            j["type"] = "flatten";
        } else {
            j["type"] = "softmax";
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<LayerSpec> layers_from_json(const json& j) {
    if (!j.is_array()) throw FormatError("layer list must be a JSON array");
    std::vector<LayerSpec> layers;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("type") || !item["type"].is_string())
            throw FormatError("layer spec: missing 'type'");
        const std::string type = item["type"].get<std::string>();
        if (type == "conv") {
            Conv2DSpec spec;
            spec.filters = require_int(item, "filters");
            spec.kernel = require_int(item, "kernel");
            spec.stride = item.contains("stride") ? require_int(item, "stride") : 1;
            spec.pad = item.contains("pad") ? require_int(item, "pad") : 0;
            spec.in_channels = require_int(item, "in_channels");
            if (item.contains("connectivity")) {
                const auto& table = item["connectivity"];
                if (!table.is_array() || table.size() != static_cast<std::size_t>(spec.filters))
                    throw FormatError("conv connectivity: need one row per filter");
                for (const auto& row : table) {
                    if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.in_channels))
                        throw FormatError("conv connectivity: row length must equal in_channels");
                    for (const auto& v : row)
                        spec.connectivity.push_back(v.get<bool>() ? 1 : 0);
                }
            }
            spec.validate();
            layers.push_back(std::move(spec));
        } else if (type == "maxpool") {
            PoolSpec spec;
            spec.extent = require_int(item, "extent");
            spec.stride = require_int(item, "stride");
            spec.trainable_affine = item.value("affine", false);
            spec.validate();
            layers.push_back(spec);
        } else if (type == "dense") {
            DenseSpec spec;
            spec.in_features = require_int(item, "in");
            spec.out_features = require_int(item, "out");
            spec.validate();
            layers.push_back(spec);
        } else if (type == "relu") {
            layers.push_back(ReluSpec{});
        } else if (type == "flatten") {
            layers.push_back(FlattenSpec{});
        } else if (type == "softmax") {
            layers.push_back(SoftmaxSpec{});
        } else {
            throw FormatError("unknown layer type '" + type + "'");
        }
    }
    return layers;
}

void save_model(const Model& model, const std::filesystem::path& path) {
    json header;
    header["input_shape"] = json::array();
    for (std::size_t i = 0; i < model.input_shape.rank(); ++i)
        header["input_shape"].push_back(model.input_shape.dim(i));
    header["class_count"] = model.class_count;
    header["class_names"] = model.class_names;
    header["layers"] = layers_to_json(model.layers);
    header["parameter_count"] = model.parameter_count();
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kModelMagic, kModelMagic + 4);
    put_u32(bytes, kModelVersion);
    put_u32(bytes, static_cast<std::uint32_t>(header_text.size()));
    bytes.insert(bytes.end(), header_text.begin(), header_text.end());
    for (std::size_t i = 0; i < model.layers.size(); ++i)
        pack_layer(bytes, model.layers[i], model.params[i]);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path.string());
    file.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IoError("short write to " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic, not a DCNN model file");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kModelVersion)
        throw FormatError(path.string() + ": unsupported format version " +
                          std::to_string(version));
    const std::uint32_t header_len = get_u32(bytes.data() + 8);
    if (bytes.size() < 12 + static_cast<std::size_t>(header_len))
        throw FormatError(path.string() + ": truncated header");

    json header;
    try {
        header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": header is not valid JSON: " + e.what());
    }

    Model model;
    try {
        std::vector<std::size_t> dims;
        for (const auto& d : header.at("input_shape")) dims.push_back(d.get<std::size_t>());
        model.input_shape = Shape(std::span<const std::size_t>(dims));
        model.class_count = header.at("class_count").get<int>();
        model.class_names = header.at("class_names").get<std::vector<std::string>>();
        model.layers = layers_from_json(header.at("layers"));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad header field: " + e.what());
    }
    if (model.class_names.size() != static_cast<std::size_t>(model.class_count))
        throw FormatError(path.string() + ": class_names length does not match class_count");

    chain_shapes(model);  // validates the layer chain against the declared shapes

    const std::int64_t declared = model.parameter_count();
    if (header.contains("parameter_count") &&
        header["parameter_count"].get<std::int64_t>() != declared)
        throw FormatError(path.string() + ": header parameter_count " +
                          header["parameter_count"].dump() + " does not match layer specs (" +
                          std::to_string(declared) + ")");
    const std::size_t payload = bytes.size() - 12 - header_len;
    if (payload != static_cast<std::size_t>(declared) * 4)
        throw FormatError(path.string() + ": payload length " + std::to_string(payload) +
                          " bytes, expected " + std::to_string(declared * 4) + " (4 x " +
                          std::to_string(declared) + " parameters)");

    // allocate zeroed parameter tensors, then fill from the payload
    Shape cur = model.input_shape;
    for (const auto& layer : model.layers) {
        LayerParams p;
        if (const auto* conv = std::get_if<Conv2DSpec>(&layer)) {
            p.weights = Tensor(Shape{static_cast<std::size_t>(conv->filters),
                                     static_cast<std::size_t>(conv->kernel),
                                     static_cast<std::size_t>(conv->kernel),
                                     static_cast<std::size_t>(conv->in_channels)});
            p.biases = Tensor(Shape{static_cast<std::size_t>(conv->filters)});
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            p.weights = Tensor(Shape{static_cast<std::size_t>(dense->out_features),
                                     static_cast<std::size_t>(dense->in_features)});
            p.biases = Tensor(Shape{static_cast<std::size_t>(dense->out_features)});
        } else if (const auto* pool = std::get_if<PoolSpec>(&layer)) {
            if (pool->trainable_affine) {
                p.weights = Tensor(Shape{cur.dim(2)}, 1.0f);
                p.biases = Tensor(Shape{cur.dim(2)});
            }
        }
        model.params.push_back(std::move(p));
        cur = layer_output_shape(layer, cur);
    }
    const std::uint8_t* cursor = bytes.data() + 12 + header_len;
    for (std::size_t i = 0; i < model.layers.size(); ++i)
        unpack_layer(cursor, model.layers[i], model.params[i]);
    return model;
}

}  // namespace dcnn
