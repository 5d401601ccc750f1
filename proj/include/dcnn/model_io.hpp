#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "dcnn/model.hpp"

namespace dcnn {

// Binary model file:
//   magic "DCNN" | u32 LE format version (1) | u32 LE header length |
//   JSON header | payload of 32-bit LE floats.
// The header describes input shape, class names and layer specs. The payload
// holds each layer's parameters in layer order, weights then biases,
// row-major; convolution filters with a connectivity table store only their
// connected channels, so the payload length is exactly
// 4 * total trainable parameter count.
inline constexpr char kModelMagic[4] = {'D', 'C', 'N', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// JSON layer-spec schema, shared by the model header and config files:
//   {"type":"conv","filters":6,"kernel":5,"stride":1,"pad":0,"in_channels":1,
//    "connectivity":[[...bool...]...]?}
//   {"type":"relu"} | {"type":"flatten"} | {"type":"softmax"}
//   {"type":"maxpool","extent":2,"stride":2,"affine":false}
//   {"type":"dense","in":400,"out":128}
nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> layers_from_json(const nlohmann::json& j);

}  // namespace dcnn
