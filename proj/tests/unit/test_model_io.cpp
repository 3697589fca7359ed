#include <doctest.h>

#include <cmath>

#include "openhealth/model_io.hpp"
#include "openhealth/rng.hpp"
#include "support.hpp"

using namespace openhealth;
using test_support::TempDir;

namespace {

MlpModel random_model(LayerSizes sizes, std::uint64_t seed, bool stats) {
    Rng rng(seed);
    MlpModel m(sizes);
    for (auto& v : m.parameters())
        v = rng.normal(0, 0.5);
    if (stats) {
        FeatureStats st;
        for (std::size_t i = 0; i < sizes.inputs; ++i) {
            st.mean.push_back(rng.normal(0, 3));
            st.std.push_back(rng.uniform(0.1, 4));
        }
        m.set_normalization(st);
    }
    return m;
}

} // namespace

TEST_CASE("float model round trips bit-exactly") {
    for (bool stats : {false, true}) {
        const auto m = random_model(kHarLayers, 3, stats);
        CHECK(deserialize_model(serialize_model(m)) == m);
    }
    TempDir dir;
    const auto m = random_model(kGestureLayers, 4, true);
    save_model(m, dir / "m.bin");
    CHECK(load_model(dir / "m.bin") == m);
}

TEST_CASE("float model format errors") {
    const auto bytes = serialize_model(random_model({3, 2, 2}, 1, true));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bad), ModelFormatError);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{15}, bytes.size() - 1})
        CHECK_THROWS_AS(deserialize_model(std::span(bytes).first(cut)), ModelFormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_model(trailing), ModelFormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), ModelFormatError);
}

TEST_CASE("quantization error is bounded by half a step") {
    const auto m = random_model(kHarLayers, 8, false);
    const auto q = quantize(m);
    const auto back = dequantize(q);
    const std::array<std::size_t, 5> offsets{0, m.b1_offset(), m.w2_offset(), m.b2_offset(), m.parameter_count()};
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t i = offsets[t]; i < offsets[t + 1]; ++i)
            CHECK(std::abs(back.parameters()[i] - m.parameters()[i]) <= 0.5 * q.tensors[t].scale * (1 + 1e-6));
}

TEST_CASE("all-zero tensors survive quantization exactly") {
    MlpModel m(LayerSizes{4, 3, 2});
    const auto back = dequantize(quantize(m));
    for (double v : back.parameters())
        CHECK(v == 0.0);
}

TEST_CASE("quantized blob round trip and size") {
    const auto m = random_model(kHarLayers, 5, true);
    const auto q = quantize(m);
    const auto bytes = serialize_quantized(q);
    CHECK(bytes.size() == quantized_blob_size(kHarLayers, true));
    CHECK(bytes.size() == flash_bytes(q));
    CHECK(bytes.size() < 2048);
    // 16 header + 4 x 5 tensor metadata + parameters + flag + fp16 mean/std
    CHECK(bytes.size() == 16 + 20 + kHarLayers.parameter_count() + 1 + 4 * 84);
    CHECK(quantized_blob_size(kHarLayers, false) == 16 + 20 + kHarLayers.parameter_count() + 1);

    const auto back = deserialize_quantized(bytes);
    CHECK(back.sizes == q.sizes);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(back.tensors[t].scale == q.tensors[t].scale);
        CHECK(back.tensors[t].zero_point == q.tensors[t].zero_point);
        CHECK(back.tensors[t].values == q.tensors[t].values);
    }
    CHECK(back.mean_f16 == q.mean_f16);
    CHECK(back.std_f16 == q.std_f16);

    TempDir dir;
    test_support::spit(dir / "q.bin", std::string(bytes.begin(), bytes.end()));
    CHECK(load_model(dir / "q.bin") == dequantize(q));
}

TEST_CASE("quantized blob format errors") {
    const auto bytes = serialize_quantized(quantize(random_model({5, 3, 2}, 2, false)));
    for (std::size_t cut = 0; cut < bytes.size(); cut += 7)
        CHECK_THROWS_AS(deserialize_quantized(std::span(bytes).first(cut)), ModelFormatError);
    auto bad = bytes;
    bad[3] = '2';
    CHECK_THROWS_AS(deserialize_quantized(bad), ModelFormatError);
}

TEST_CASE("half precision conversion") {
    CHECK(float_to_half(0.0f) == 0x0000);
    CHECK(float_to_half(-0.0f) == 0x8000);
    CHECK(float_to_half(1.0f) == 0x3c00);
    CHECK(float_to_half(-2.0f) == 0xc000);
    CHECK(float_to_half(65504.0f) == 0x7bff);
    CHECK(float_to_half(70000.0f) == 0x7c00);
    CHECK(float_to_half(std::ldexp(1.0f, -24)) == 0x0001); // smallest subnormal
    CHECK(float_to_half(1.0f + std::ldexp(1.0f, -11)) == 0x3c00); // tie to even
    CHECK(float_to_half(1.0f + 3 * std::ldexp(1.0f, -11)) == 0x3c02);
    CHECK(std::isnan(half_to_float(float_to_half(std::nanf("")))));
    // every finite half converts back to itself
    for (std::uint32_t h = 0; h < 0x10000; ++h) {
        const auto v = static_cast<std::uint16_t>(h);
        if ((v & 0x7c00) == 0x7c00)
            continue;
        REQUIRE(float_to_half(half_to_float(v)) == v);
    }
    // relative error of normal values is at most 2^-11
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const float x = static_cast<float>(rng.uniform(-100, 100));
        if (std::abs(x) < 1e-3f)
            continue;
        CHECK(std::abs(half_to_float(float_to_half(x)) - x) <= std::abs(x) * std::ldexp(1.0f, -11));
    }
}

TEST_CASE("dequantized stats respect the std floor") {
    auto m = random_model({2, 2, 2}, 1, true);
    FeatureStats st = m.normalization();
    st.std[0] = 1e-12;
    m.set_normalization(st);
    const auto back = dequantize(quantize(m));
    CHECK(back.normalization().std[0] >= kStdFloor);
}
