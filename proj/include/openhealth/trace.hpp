#pragma once

// Trace file: UTF-8, one event per line, tab separated
//
//   t_ms <TAB> kind <TAB> entity <TAB> key=value ...
//
// preceded by '#' header lines, the first of which is
// "#openhealth-trace<TAB>v1". Everything reported about a run (metrics,
// replay checks, the per-device CSV log) is recomputed from this text alone.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "openhealth/core.hpp"

namespace openhealth {

inline constexpr std::string_view kTraceMagic = "#openhealth-trace";
inline constexpr std::string_view kTraceVersion = "v1";

struct TraceLine {
    std::size_t line_no = 0; // 1-based
    std::int64_t t_ms = 0;
    std::string kind;
    std::string entity;
    std::map<std::string, std::string, std::less<>> fields;

    const std::string& at(std::string_view key) const; // throws TraceFormatError
    std::optional<std::string_view> get(std::string_view key) const;
    double number(std::string_view key) const;
    std::int64_t integer(std::string_view key) const;
};

class TraceFormatError : public std::runtime_error {
  public:
    TraceFormatError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

struct ParsedTrace {
    std::optional<std::string> version;
    std::map<std::string, std::string> header; // other '#' lines
    std::vector<TraceLine> events;
};

ParsedTrace parse_trace(std::string_view text);

// Raw-sample byte patterns searched for in channel traffic: each accel
// component as f64 (both byte orders), as f32 (both byte orders), and the
// three components as int16 at +-16 g full scale (both byte orders).
std::vector<std::vector<std::uint8_t>> canary_patterns(const Vec3& accel);
std::size_t count_pattern_hits(std::span<const std::uint8_t> haystack,
                               const std::vector<std::vector<std::uint8_t>>& patterns);

nlohmann::json compute_metrics(std::string_view trace);

struct ReplayOptions {
    bool energy = true;
    bool sequence = true;
    bool canary = true;
    bool completeness = true;
};

struct ReplayFailure {
    std::string check;
    std::size_t line = 0; // 0 when not tied to one line
    std::string message;
};

struct ReplayReport {
    bool passed = true;
    std::vector<std::string> warnings;
    std::vector<ReplayFailure> failures;
    std::map<std::string, bool> checks; // check name -> passed
};

class TraceVersionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Throws TraceVersionError when a nonempty trace lacks the v1 header.
ReplayReport replay(std::string_view trace, const ReplayOptions& options = {});

// t_ms,event,device_id,state,battery_mwh
std::string device_log_csv(std::string_view trace);

} // namespace openhealth
