#include "openhealth/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "openhealth/wire.hpp"

namespace openhealth {

namespace {

constexpr std::string_view kFloatMagic = "OHM1";
constexpr std::string_view kQuantMagic = "OHQ1";
constexpr std::size_t kHeaderBytes = 4 + 3 * 4;
constexpr std::size_t kTensorMetaBytes = 4 + 1;
constexpr std::uint32_t kMaxLayerWidth = 1u << 16;

void put_magic(ByteWriter& w, std::string_view magic) {
    for (char c : magic)
        w.u8(static_cast<std::uint8_t>(c));
}

LayerSizes read_header(ByteReader& r, std::string_view magic) {
    for (char c : magic)
        if (r.u8() != static_cast<std::uint8_t>(c))
            throw ModelFormatError("bad magic, expected " + std::string(magic));
    LayerSizes s;
    s.inputs = r.u32();
    s.hidden = r.u32();
    s.outputs = r.u32();
    if (s.inputs > kMaxLayerWidth || s.hidden > kMaxLayerWidth || s.outputs > kMaxLayerWidth)
        throw ModelFormatError("implausible layer sizes");
    return s;
}

std::array<std::pair<std::size_t, std::size_t>, 4> tensor_ranges(const LayerSizes& s) {
    const std::size_t w1 = s.inputs * s.hidden;
    const std::size_t b1 = s.hidden;
    const std::size_t w2 = s.hidden * s.outputs;
    const std::size_t b2 = s.outputs;
    return {{{0, w1}, {w1, b1}, {w1 + b1, w2}, {w1 + b1 + w2, b2}}};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ModelFormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename Fn> auto wrap_truncation(Fn&& fn) {
    try {
        return fn();
    } catch (const TruncatedInput&) {
        throw ModelFormatError("truncated model blob");
    }
}

} // namespace

std::vector<std::uint8_t> serialize_model(const MlpModel& model) {
    ByteWriter w;
    put_magic(w, kFloatMagic);
    w.u32(static_cast<std::uint32_t>(model.sizes().inputs));
    w.u32(static_cast<std::uint32_t>(model.sizes().hidden));
    w.u32(static_cast<std::uint32_t>(model.sizes().outputs));
    for (double p : model.parameters())
        w.f64(p);
    const auto& st = model.normalization();
    w.u8(st.empty() ? 0 : 1);
    if (!st.empty()) {
        for (double v : st.mean)
            w.f64(v);
        for (double v : st.std)
            w.f64(v);
    }
    return w.take();
}

MlpModel deserialize_model(std::span<const std::uint8_t> bytes) {
    return wrap_truncation([&] {
        ByteReader r(bytes);
        MlpModel m(read_header(r, kFloatMagic));
        for (auto& p : m.parameters()) {
            p = r.f64();
            if (!std::isfinite(p))
                throw ModelFormatError("non-finite parameter");
        }
        const auto flag = r.u8();
        if (flag > 1)
            throw ModelFormatError("bad stats flag");
        if (flag == 1) {
            FeatureStats st;
            st.mean.resize(m.sizes().inputs);
            st.std.resize(m.sizes().inputs);
            for (auto& v : st.mean)
                v = r.f64();
            for (auto& v : st.std)
                v = r.f64();
            m.set_normalization(std::move(st));
        }
        if (!r.at_end())
            throw ModelFormatError("trailing bytes after model");
        return m;
    });
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ModelFormatError("cannot write " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "OHQ1"))
        return dequantize(deserialize_quantized(bytes));
    return deserialize_model(bytes);
}

std::uint16_t float_to_half(float f) {
    const auto x = std::bit_cast<std::uint32_t>(f);
    const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
    const std::uint32_t exp = (x >> 23) & 0xffu;
    std::uint32_t mant = x & 0x7fffffu;

    if (exp == 0xff) // inf / nan
        return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0u));
    const int e = static_cast<int>(exp) - 127 + 15;
    if (e >= 0x1f)
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    if (e <= 0) {
        if (e < -10)
            return sign;
        mant |= 0x800000u;
        const int shift = 14 - e;
        std::uint32_t half = mant >> shift;
        const std::uint32_t rem = mant & ((1u << shift) - 1);
        const std::uint32_t midpoint = 1u << (shift - 1);
        if (rem > midpoint || (rem == midpoint && (half & 1u)))
            ++half;
        return static_cast<std::uint16_t>(sign | half);
    }
    std::uint32_t half = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u)))
        ++half; // may carry into the exponent, which is the correct rounding
    return static_cast<std::uint16_t>(sign | half);
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    const std::uint32_t mant = h & 0x3ffu;
    if (exp == 0) {
        const float v = std::ldexp(static_cast<float>(mant), -24);
        return sign ? -v : v;
    }
    if (exp == 0x1f)
        return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
    return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

QuantizedModel quantize(const MlpModel& model) {
    QuantizedModel q;
    q.sizes = model.sizes();
    const auto params = model.parameters();
    const auto ranges = tensor_ranges(q.sizes);
    for (std::size_t t = 0; t < 4; ++t) {
        const auto [offset, count] = ranges[t];
        auto& out = q.tensors[t];
        double lo = 0.0;
        double hi = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            lo = std::min(lo, params[offset + i]);
            hi = std::max(hi, params[offset + i]);
        }
        out.scale = hi > lo ? static_cast<float>((hi - lo) / 255.0) : 1.0f;
        const double scale = out.scale;
        out.zero_point = static_cast<std::int8_t>(std::clamp(std::lround(-128.0 - lo / scale), -128L, 127L));
        out.values.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const long v = std::lround(params[offset + i] / scale) + out.zero_point;
            out.values[i] = static_cast<std::int8_t>(std::clamp(v, -128L, 127L));
        }
    }
    const auto& st = model.normalization();
    for (std::size_t i = 0; i < st.mean.size(); ++i) {
        q.mean_f16.push_back(float_to_half(static_cast<float>(st.mean[i])));
        q.std_f16.push_back(float_to_half(static_cast<float>(st.std[i])));
    }
    return q;
}

MlpModel dequantize(const QuantizedModel& q) {
    MlpModel m(q.sizes);
    auto params = m.parameters();
    const auto ranges = tensor_ranges(q.sizes);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t i = 0; i < ranges[t].second; ++i)
            params[ranges[t].first + i] = q.tensors[t].dequantize(i);
    if (!q.mean_f16.empty()) {
        FeatureStats st;
        for (std::size_t i = 0; i < q.mean_f16.size(); ++i) {
            st.mean.push_back(half_to_float(q.mean_f16[i]));
            st.std.push_back(std::max<double>(half_to_float(q.std_f16[i]), kStdFloor));
        }
        m.set_normalization(std::move(st));
    }
    return m;
}

std::size_t quantized_blob_size(LayerSizes sizes, bool with_stats) {
    const std::size_t params = sizes.parameter_count();
    if (params == 0)
        return 0;
    return kHeaderBytes + 4 * kTensorMetaBytes + params + 1 + (with_stats ? 4 * sizes.inputs : 0);
}

std::vector<std::uint8_t> serialize_quantized(const QuantizedModel& q) {
    ByteWriter w;
    put_magic(w, kQuantMagic);
    w.u32(static_cast<std::uint32_t>(q.sizes.inputs));
    w.u32(static_cast<std::uint32_t>(q.sizes.hidden));
    w.u32(static_cast<std::uint32_t>(q.sizes.outputs));
    for (const auto& t : q.tensors) {
        w.u32(std::bit_cast<std::uint32_t>(t.scale));
        w.u8(static_cast<std::uint8_t>(t.zero_point));
    }
    for (const auto& t : q.tensors)
        for (auto v : t.values)
            w.u8(static_cast<std::uint8_t>(v));
    w.u8(q.mean_f16.empty() ? 0 : 1);
    for (auto v : q.mean_f16)
        w.u16(v);
    for (auto v : q.std_f16)
        w.u16(v);
    return w.take();
}

QuantizedModel deserialize_quantized(std::span<const std::uint8_t> bytes) {
    return wrap_truncation([&] {
        ByteReader r(bytes);
        QuantizedModel q;
        q.sizes = read_header(r, kQuantMagic);
        const auto ranges = tensor_ranges(q.sizes);
        for (std::size_t t = 0; t < 4; ++t) {
            q.tensors[t].scale = std::bit_cast<float>(r.u32());
            q.tensors[t].zero_point = static_cast<std::int8_t>(r.u8());
            q.tensors[t].values.resize(ranges[t].second);
        }
        for (auto& t : q.tensors)
            for (auto& v : t.values)
                v = static_cast<std::int8_t>(r.u8());
        const auto flag = r.u8();
        if (flag > 1)
            throw ModelFormatError("bad stats flag");
        if (flag == 1) {
            q.mean_f16.resize(q.sizes.inputs);
            q.std_f16.resize(q.sizes.inputs);
            for (auto& v : q.mean_f16)
                v = r.u16();
            for (auto& v : q.std_f16)
                v = r.u16();
        }
        if (!r.at_end())
            throw ModelFormatError("trailing bytes after model");
        return q;
    });
}

} // namespace openhealth
