#pragma once

// Shared domain types for the wearable platform: sensor samples, label sets,
// labeled recordings and the hardware profile of the base node.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace openhealth {

using Vec3 = std::array<double, 3>;

inline constexpr double kAccelFullScaleG = 16.0;
inline constexpr double kGyroFullScaleDps = 2000.0;

// One timestamped reading of the motion sensor (plus the knee-sleeve stretch
// sensor when the recording has one). accel in g, gyro in degrees/second.
struct SensorSample {
    std::int64_t t_ms = 0;
    Vec3 accel{};
    Vec3 gyro{};
    std::optional<double> stretch;

    friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

// Encoded as 0..6 in declaration order.
enum class ActivityLabel : std::uint8_t { Drive, Jump, LieDown, Sit, Stand, Walk, Transition };

// Encoded as 0..3 in declaration order.
enum class GestureLabel : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::size_t kActivityClassCount = 7;
inline constexpr std::size_t kGestureClassCount = 4;

// Application running on the node. Values match the wire app_id byte.
enum class AppKind : std::uint8_t { Har = 1, Gesture = 2 };

using Label = std::variant<ActivityLabel, GestureLabel>;

int label_encode(Label label);
ActivityLabel decode_activity(int index);
GestureLabel decode_gesture(int index);
Label label_decode(AppKind app, int index);

AppKind app_of(Label label);
std::size_t class_count(AppKind app);

// Identifier form used in dataset files ("LieDown", "Up", ...). Names are
// unique across both label sets.
std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);

// Human-facing form used in accuracy reports ("Lie Down", "Transitions").
std::string_view display_name(Label label);

std::string_view app_name(AppKind app);
std::optional<AppKind> parse_app(std::string_view name);

// Closed interval [start_ms, end_ms] of sample timestamps carrying one label.
struct Annotation {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    Label label = ActivityLabel::Drive;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct LabeledRecording {
    std::vector<SensorSample> samples;
    std::vector<Annotation> annotations;
    std::string subject_id;
    std::map<std::string, std::string> metadata;

    bool has_stretch() const { return !samples.empty() && samples.front().stretch.has_value(); }

    // Label of the annotation covering t_ms, if any.
    std::optional<Label> label_at(std::int64_t t_ms) const;
};

class InvalidRecording : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Throws InvalidRecording naming the first violated invariant.
void validate_sample(const SensorSample& s);
void validate_recording(const LabeledRecording& r);

// Hardware budget of the base node. The first four values are fixed by the
// MCU and the measured application power draws; the rest are configurable.
struct DeviceProfile {
    int cpu_mhz = 47;
    std::size_t sram_bytes = 20480;
    std::size_t flash_bytes = 131072;
    double p_active_har_mw = 12.5;
    double p_active_gesture_mw = 10.0;
    double p_sleep_mw = 0.3;
    double p_tx_mw = 15.0;
    double sample_rate_hz = 100.0;

    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

void validate_profile(const DeviceProfile& p);
double active_power_mw(const DeviceProfile& p, AppKind app);

} // namespace openhealth
