#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dcnn/model_io.hpp"
#include "dcnn/train.hpp"
#include "support/synthetic.hpp"

using namespace dcnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("dcnn_io_" + name + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

bool params_equal(const Model& a, const Model& b) {
    if (a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); ++i)
        if (!(a.params[i].weights == b.params[i].weights &&
              a.params[i].biases == b.params[i].biases))
            return false;
    return true;
}

}  // namespace

TEST_CASE("reference model: shapes and the 58,588 parameter total") {
    const Model model = assemble_reference_model(1234);
    const auto shapes = chain_shapes(model);
    CHECK(shapes[0] == Shape{28, 28, 6});   // C1: 784 neurons per feature map
    CHECK(shapes[2] == Shape{14, 14, 6});   // S1: half the size
    CHECK(shapes[3] == Shape{10, 10, 16});  // C2
    CHECK(shapes[5] == Shape{5, 5, 16});    // S2
    CHECK(shapes[6] == Shape{400});         // flatten
    CHECK(shapes.back() == Shape{36});

    // 156 + 12 + 2416 + 32 + 51328 + 4644
    CHECK(model.parameter_count() == 58'588);
}

TEST_CASE("model file roundtrip is bit-exact") {
    TempDir tmp("roundtrip");
    const Model model = assemble_reference_model(42);
    const fs::path file = tmp.path / "model.dcnn";
    save_model(model, file);

    // payload = 4 bytes per parameter after the 12-byte preamble and header
    const auto bytes = slurp(file);
    const std::uint32_t header_len = static_cast<std::uint32_t>(bytes[8]) |
                                     (static_cast<std::uint32_t>(bytes[9]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[10]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[11]) << 24);
    CHECK(bytes.size() == 12 + header_len + 4 * 58'588);

    const Model back = load_model(file);
    CHECK(back.class_count == model.class_count);
    CHECK(back.class_names == model.class_names);
    CHECK(back.input_shape == model.input_shape);
    CHECK(params_equal(model, back));
}

TEST_CASE("masked convolutions store only connected channels") {
    TempDir tmp("masked");
    Conv2DSpec conv;
    conv.filters = 3;
    conv.kernel = 3;
    conv.in_channels = 2;
    conv.connectivity = {1, 0, 0, 1, 1, 1};  // fan-ins 1, 1, 2
    std::vector<LayerSpec> layers{conv, FlattenSpec{}, DenseSpec{12, 4}, SoftmaxSpec{}};
    const Model model = assemble_model(Shape{4, 4, 2}, 4, layers, 7);

    const std::int64_t expected_params = (9 * 1 + 1) + (9 * 1 + 1) + (9 * 2 + 1) + 13 * 4;
    CHECK(model.parameter_count() == expected_params);

    const fs::path file = tmp.path / "masked.dcnn";
    save_model(model, file);
    const auto bytes = slurp(file);
    const std::uint32_t header_len = static_cast<std::uint32_t>(bytes[8]) |
                                     (static_cast<std::uint32_t>(bytes[9]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[10]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[11]) << 24);
    CHECK(bytes.size() == 12 + header_len + 4 * static_cast<std::size_t>(expected_params));

    const Model back = load_model(file);
    CHECK(params_equal(model, back));
    // masked slots stay exactly zero after the roundtrip
    const auto* spec = std::get_if<Conv2DSpec>(&back.layers[0]);
    REQUIRE(spec != nullptr);
    CHECK(back.params[0].weights.at(0, 1, 1, 1) == 0.0f);
    CHECK(back.params[0].weights.at(1, 0, 0, 0) == 0.0f);
}

TEST_CASE("model file validation fails closed") {
    TempDir tmp("badfile");
    const Model model = assemble_reference_model(9);
    const fs::path file = tmp.path / "m.dcnn";
    save_model(model, file);
    const auto good = slurp(file);

    SUBCASE("bad magic") {
        auto bad = good;
        bad[0] = 'X';
        dump(file, bad);
        CHECK_THROWS_WITH_AS(load_model(file), doctest::Contains("magic"), FormatError);
    }
    SUBCASE("unsupported version") {
        auto bad = good;
        bad[4] = 99;
        dump(file, bad);
        CHECK_THROWS_WITH_AS(load_model(file), doctest::Contains("version"), FormatError);
    }
    SUBCASE("truncated payload") {
        auto bad = good;
        bad.resize(bad.size() - 40);
        dump(file, bad);
        CHECK_THROWS_WITH_AS(load_model(file), doctest::Contains("payload"), FormatError);
    }
    SUBCASE("corrupt header JSON") {
        auto bad = good;
        bad[13] = '?';
        dump(file, bad);
        CHECK_THROWS_AS(load_model(file), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_model(tmp.path / "nothing.dcnn"), IoError);
    }
}

TEST_CASE("layer JSON roundtrip") {
    Conv2DSpec conv;
    conv.filters = 2;
    conv.kernel = 3;
    conv.stride = 2;
    conv.pad = 1;
    conv.in_channels = 3;
    conv.connectivity = {1, 0, 1, 0, 1, 1};
    PoolSpec pool;
    pool.extent = 2;
    pool.stride = 2;
    pool.trainable_affine = true;
    const std::vector<LayerSpec> layers{conv,          ReluSpec{},    pool,
                                        FlattenSpec{}, DenseSpec{8, 4}, SoftmaxSpec{}};
    const auto j = layers_to_json(layers);
    const auto back = layers_from_json(j);
    REQUIRE(back.size() == layers.size());
    const auto* c = std::get_if<Conv2DSpec>(&back[0]);
    REQUIRE(c != nullptr);
    CHECK(c->filters == 2);
    CHECK(c->stride == 2);
    CHECK(c->pad == 1);
    CHECK(c->connectivity == conv.connectivity);
    const auto* p = std::get_if<PoolSpec>(&back[2]);
    REQUIRE(p != nullptr);
    CHECK(p->trainable_affine);
    CHECK(std::holds_alternative<SoftmaxSpec>(back[5]));

    CHECK_THROWS_AS(layers_from_json(nlohmann::json::parse(R"([{"type":"conv"}])")), FormatError);
    CHECK_THROWS_AS(layers_from_json(nlohmann::json::parse(R"([{"type":"warp"}])")), FormatError);
}

TEST_CASE("evaluate is identical before and after a save/load roundtrip") {
    TempDir tmp("eval");
    const auto ds = synthetic::make_glyph_dataset(4, 6, 31);
    Model model = assemble_reference_model(5, 4);
    model.class_names = ds.class_names;

    const fs::path file = tmp.path / "m.dcnn";
    save_model(model, file);
    const Model back = load_model(file);

    const EvalReport before = evaluate(model, ds.examples);
    const EvalReport after = evaluate(back, ds.examples);
    CHECK(before.loss == after.loss);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.macro_precision == after.macro_precision);
    CHECK(before.macro_recall == after.macro_recall);
    CHECK(before.confusion == after.confusion);
}
