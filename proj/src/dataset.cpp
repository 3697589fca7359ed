#include "openhealth/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace openhealth {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::string_view column, std::size_t line) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw DatasetError(fmt::format("column {}: not a finite decimal '{}'", column, field), line);
    return v;
}

std::int64_t parse_int(std::string_view field, std::size_t line) {
    std::int64_t v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc{} || ptr != end)
        throw DatasetError(fmt::format("column t_ms: not an integer '{}'", field), line);
    return v;
}

} // namespace

double quantize_decimal(double v) {
    const double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;
}

LabeledRecording parse_dataset(std::string_view text, std::string subject_id) {
    LabeledRecording rec;
    rec.subject_id = std::move(subject_id);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    std::optional<bool> stretch_present;
    std::optional<Label> run_label;
    std::int64_t run_start = 0;
    std::int64_t run_end = 0;

    auto close_run = [&] {
        if (run_label)
            rec.annotations.push_back({run_start, run_end, *run_label});
        run_label.reset();
    };

    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        if (!saw_header) {
            if (line != kDatasetHeader)
                throw DatasetError(fmt::format("malformed header, expected '{}'", kDatasetHeader), line_no);
            saw_header = true;
            continue;
        }
        if (line.empty())
            continue;

        const auto f = split_fields(line);
        if (f.size() != 9)
            throw DatasetError(fmt::format("expected 9 columns, found {}", f.size()), line_no);

        SensorSample s;
        s.t_ms = parse_int(f[0], line_no);
        static constexpr std::array<std::string_view, 6> names = {"ax", "ay", "az", "gx", "gy", "gz"};
        for (int i = 0; i < 3; ++i) {
            s.accel[i] = parse_double(f[1 + i], names[i], line_no);
            s.gyro[i] = parse_double(f[4 + i], names[3 + i], line_no);
        }
        const bool has_stretch = !f[7].empty();
        if (stretch_present && *stretch_present != has_stretch)
            throw DatasetError("stretch column must be empty on all rows or none", line_no);
        stretch_present = has_stretch;
        if (has_stretch)
            s.stretch = parse_double(f[7], "stretch", line_no);

        if (!rec.samples.empty() && s.t_ms <= rec.samples.back().t_ms)
            throw DatasetError(fmt::format("timestamp {} not greater than previous {}", s.t_ms,
                                           rec.samples.back().t_ms),
                               line_no);
        try {
            validate_sample(s);
        } catch (const InvalidRecording& e) {
            throw DatasetError(e.what(), line_no);
        }

        std::optional<Label> label;
        if (!f[8].empty()) {
            label = parse_label(f[8]);
            if (!label)
                throw DatasetError(fmt::format("unknown label '{}'", f[8]), line_no);
            if (run_label && app_of(*run_label) != app_of(*label))
                throw DatasetError("activity and gesture labels mixed in one file", line_no);
            if (!rec.annotations.empty() && app_of(rec.annotations.front().label) != app_of(*label))
                throw DatasetError("activity and gesture labels mixed in one file", line_no);
        }

        if (label != run_label) {
            close_run();
            if (label) {
                run_label = label;
                run_start = s.t_ms;
            }
        }
        if (label)
            run_end = s.t_ms;
        rec.samples.push_back(s);
    }
    if (!saw_header)
        throw DatasetError("empty file: missing header", 1);
    close_run();
    return rec;
}

LabeledRecording read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DatasetError("cannot open " + path.string(), 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), path.stem().string());
}

std::string format_dataset(const LabeledRecording& recording) {
    validate_recording(recording);

    auto annotations = recording.annotations;
    std::sort(annotations.begin(), annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.start_ms < b.start_ms; });

    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "{}\n", kDatasetHeader);
    std::size_t next = 0;
    for (const auto& s : recording.samples) {
        while (next < annotations.size() && annotations[next].end_ms < s.t_ms)
            ++next;
        std::string_view label;
        if (next < annotations.size() && annotations[next].start_ms <= s.t_ms)
            label = label_name(annotations[next].label);

        fmt::format_to(std::back_inserter(out), "{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},", s.t_ms,
                       s.accel[0], s.accel[1], s.accel[2], s.gyro[0], s.gyro[1], s.gyro[2]);
        if (s.stretch)
            fmt::format_to(std::back_inserter(out), "{:.6f}", *s.stretch);
        fmt::format_to(std::back_inserter(out), ",{}\n", label);
    }
    return fmt::to_string(out);
}

void write_dataset(const LabeledRecording& recording, const std::filesystem::path& path) {
    const std::string text = format_dataset(recording);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DatasetError("cannot open " + path.string() + " for writing", 0);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw DatasetError("write failed for " + path.string(), 0);
}

double storage_budget(double rate_hz, unsigned channels, unsigned bytes_per_scalar, double duration_s) {
    if (!(rate_hz > 0) || channels == 0 || bytes_per_scalar == 0 || !(duration_s > 0))
        throw std::invalid_argument("storage_budget arguments must all be > 0");
    return rate_hz * channels * bytes_per_scalar * duration_s;
}

} // namespace openhealth
