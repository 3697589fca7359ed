#include "openhealth/core.hpp"

#include <cmath>
#include <string>

namespace openhealth {

namespace {

constexpr std::array<std::string_view, kActivityClassCount> kActivityNames = {
    "Drive", "Jump", "LieDown", "Sit", "Stand", "Walk", "Transition"};
constexpr std::array<std::string_view, kActivityClassCount> kActivityDisplay = {
    "Drive", "Jump", "Lie Down", "Sit", "Stand", "Walk", "Transitions"};
constexpr std::array<std::string_view, kGestureClassCount> kGestureNames = {"Up", "Down", "Left",
                                                                            "Right"};

} // namespace

int label_encode(Label label) {
    return std::visit([](auto l) { return static_cast<int>(l); }, label);
}

ActivityLabel decode_activity(int index) {
    if (index < 0 || index >= static_cast<int>(kActivityClassCount))
        throw std::out_of_range("activity label index out of range: " + std::to_string(index));
    return static_cast<ActivityLabel>(index);
}

GestureLabel decode_gesture(int index) {
    if (index < 0 || index >= static_cast<int>(kGestureClassCount))
        throw std::out_of_range("gesture label index out of range: " + std::to_string(index));
    return static_cast<GestureLabel>(index);
}

Label label_decode(AppKind app, int index) {
    if (app == AppKind::Har)
        return decode_activity(index);
    return decode_gesture(index);
}

AppKind app_of(Label label) {
    return std::holds_alternative<ActivityLabel>(label) ? AppKind::Har : AppKind::Gesture;
}

std::size_t class_count(AppKind app) {
    return app == AppKind::Har ? kActivityClassCount : kGestureClassCount;
}

std::string_view label_name(Label label) {
    if (auto a = std::get_if<ActivityLabel>(&label))
        return kActivityNames[static_cast<std::size_t>(*a)];
    return kGestureNames[static_cast<std::size_t>(std::get<GestureLabel>(label))];
}

std::optional<Label> parse_label(std::string_view name) {
    for (std::size_t i = 0; i < kActivityNames.size(); ++i)
        if (kActivityNames[i] == name)
            return static_cast<ActivityLabel>(i);
    for (std::size_t i = 0; i < kGestureNames.size(); ++i)
        if (kGestureNames[i] == name)
            return static_cast<GestureLabel>(i);
    return std::nullopt;
}

std::string_view display_name(Label label) {
    if (auto a = std::get_if<ActivityLabel>(&label))
        return kActivityDisplay[static_cast<std::size_t>(*a)];
    return label_name(label);
}

std::string_view app_name(AppKind app) { return app == AppKind::Har ? "har" : "gesture"; }

std::optional<AppKind> parse_app(std::string_view name) {
    if (name == "har")
        return AppKind::Har;
    if (name == "gesture")
        return AppKind::Gesture;
    return std::nullopt;
}

std::optional<Label> LabeledRecording::label_at(std::int64_t t_ms) const {
    for (const auto& a : annotations)
        if (a.start_ms <= t_ms && t_ms <= a.end_ms)
            return a.label;
    return std::nullopt;
}

void validate_sample(const SensorSample& s) {
    for (double v : s.accel)
        if (!std::isfinite(v) || std::abs(v) > kAccelFullScaleG)
            throw InvalidRecording("accelerometer reading outside +/-16 g at t_ms=" +
                                   std::to_string(s.t_ms));
    for (double v : s.gyro)
        if (!std::isfinite(v) || std::abs(v) > kGyroFullScaleDps)
            throw InvalidRecording("gyroscope reading outside +/-2000 dps at t_ms=" +
                                   std::to_string(s.t_ms));
    if (s.stretch && !(*s.stretch >= 0.0 && *s.stretch <= 1.0))
        throw InvalidRecording("stretch reading outside [0,1] at t_ms=" + std::to_string(s.t_ms));
}

void validate_recording(const LabeledRecording& r) {
    const bool stretch = r.has_stretch();
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        const auto& s = r.samples[i];
        validate_sample(s);
        if (s.stretch.has_value() != stretch)
            throw InvalidRecording("mixed stretch availability at sample " + std::to_string(i));
        if (i > 0 && s.t_ms <= r.samples[i - 1].t_ms)
            throw InvalidRecording("timestamps not strictly increasing at sample " +
                                   std::to_string(i));
    }
    for (std::size_t i = 0; i < r.annotations.size(); ++i) {
        const auto& a = r.annotations[i];
        if (a.end_ms < a.start_ms)
            throw InvalidRecording("annotation " + std::to_string(i) + " has end before start");
        if (!r.samples.empty() &&
            (a.start_ms < r.samples.front().t_ms || a.end_ms > r.samples.back().t_ms))
            throw InvalidRecording("annotation " + std::to_string(i) +
                                   " lies outside the sample time range");
        if (r.samples.empty())
            throw InvalidRecording("annotation " + std::to_string(i) + " on an empty recording");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& b = r.annotations[j];
            if (a.start_ms <= b.end_ms && b.start_ms <= a.end_ms)
                throw InvalidRecording("annotations " + std::to_string(j) + " and " +
                                       std::to_string(i) + " overlap");
        }
    }
}

void validate_profile(const DeviceProfile& p) {
    if (!(p.p_active_har_mw > 0 && p.p_active_gesture_mw > 0 && p.p_sleep_mw > 0 && p.p_tx_mw > 0))
        throw std::invalid_argument("device profile power values must be > 0");
    if (!(p.sample_rate_hz > 0))
        throw std::invalid_argument("device profile sample_rate_hz must be > 0");
    if (p.cpu_mhz <= 0 || p.sram_bytes == 0 || p.flash_bytes == 0)
        throw std::invalid_argument("device profile cpu/sram/flash must be > 0");
}

double active_power_mw(const DeviceProfile& p, AppKind app) {
    return app == AppKind::Har ? p.p_active_har_mw : p.p_active_gesture_mw;
}

} // namespace openhealth
