#pragma once

// Binary model formats. All multi-byte fields are big-endian.
//
// OHM1 (float model)
//   "OHM1" | inputs u32 | hidden u32 | outputs u32
//   | parameters f64 x parameter_count (MlpModel flat layout)
//   | has_stats u8 | [mean f64 x inputs | std f64 x inputs]
//
// OHQ1 (int8 model, per-tensor affine)
//   "OHQ1" | inputs u32 | hidden u32 | outputs u32
//   | 4 x (scale f32 | zero_point i8)   for w1, b1, w2, b2
//   | parameters i8 x parameter_count
//   | has_stats u8 | [mean f16 x inputs | std f16 x inputs]

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "openhealth/mlp.hpp"

namespace openhealth {

class ModelFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const MlpModel& model, const std::filesystem::path& path);
// Accepts either format; an OHQ1 file comes back dequantized.
MlpModel load_model(const std::filesystem::path& path);

struct QuantizedTensor {
    float scale = 1.0f;
    std::int8_t zero_point = 0;
    std::vector<std::int8_t> values;

    double dequantize(std::size_t i) const {
        return static_cast<double>(scale) * (static_cast<int>(values[i]) - static_cast<int>(zero_point));
    }
};

struct QuantizedModel {
    LayerSizes sizes;
    std::array<QuantizedTensor, 4> tensors; // w1, b1, w2, b2
    std::vector<std::uint16_t> mean_f16;
    std::vector<std::uint16_t> std_f16;
};

// Per-tensor affine int8 over [min(0, lo), max(0, hi)] so zero is exact.
QuantizedModel quantize(const MlpModel& model);
MlpModel dequantize(const QuantizedModel& q);

std::vector<std::uint8_t> serialize_quantized(const QuantizedModel& q);
QuantizedModel deserialize_quantized(std::span<const std::uint8_t> bytes);

// Bytes the OHQ1 blob occupies in flash: one byte per parameter plus the
// header, per-tensor scale/zero-point and half-precision input stats. A model
// with no parameters stores nothing.
std::size_t quantized_blob_size(LayerSizes sizes, bool with_stats);
inline std::size_t flash_bytes(const QuantizedModel& q) {
    return quantized_blob_size(q.sizes, !q.mean_f16.empty());
}

// IEEE 754 binary16 conversions, round to nearest even.
std::uint16_t float_to_half(float f);
float half_to_float(std::uint16_t h);

} // namespace openhealth
