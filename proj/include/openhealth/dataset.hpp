#pragma once

// CSV dataset interchange and raw-storage arithmetic.
//
// File layout (one row per sample, 6 fractional digits):
//   t_ms,ax,ay,az,gx,gy,gz,stretch,label
// stretch is empty on every row for recordings without the stretch sensor;
// label is the annotation covering the row, empty when unlabeled.

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "openhealth/core.hpp"

namespace openhealth {

inline constexpr std::string_view kDatasetHeader = "t_ms,ax,ay,az,gx,gy,gz,stretch,label";
inline constexpr int kDatasetDecimals = 6;

class DatasetError : public std::runtime_error {
  public:
    DatasetError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    // 1-based line of the offending row; 0 when not tied to a row.
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// Annotations are rebuilt from contiguous runs of equal labels; subject_id is
// the file stem.
LabeledRecording read_dataset(const std::filesystem::path& path);
LabeledRecording parse_dataset(std::string_view text, std::string subject_id = {});

// Throws InvalidRecording before touching the file when the recording is
// invalid, DatasetError on I/O failure.
void write_dataset(const LabeledRecording& recording, const std::filesystem::path& path);
std::string format_dataset(const LabeledRecording& recording);

// Rounds to the fixed dataset precision (the value a write/read round trip
// yields).
double quantize_decimal(double v);

// rate_hz * channels * bytes_per_scalar * duration_s.
double storage_budget(double rate_hz, unsigned channels, unsigned bytes_per_scalar, double duration_s);

} // namespace openhealth
