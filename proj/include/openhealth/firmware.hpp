#pragma once

// Power-state machine of the wearable node and its wake-on-motion rule.
//
//   Sleep      --MotionDetected--> Sampling
//   Sampling   --WindowFull------> Processing
//   Processing --InferenceDone---> Transmitting
//   Transmitting --TxDone--------> Sampling
//   Sampling   --IdleTimeout-----> Sleep
//
// Every other (state, event) pair leaves the state unchanged and is recorded
// as a no-op.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "openhealth/core.hpp"

namespace openhealth {

enum class PowerState : std::uint8_t { Sleep, Sampling, Processing, Transmitting };
enum class DeviceEventKind : std::uint8_t { MotionDetected, WindowFull, InferenceDone, TxDone, IdleTimeout };

std::string_view state_name(PowerState s);
std::string_view event_name(DeviceEventKind e);

// Processed classifier output. This is the only thing a node sends upstream
// in local-processing mode.
struct InferenceOutput {
    std::int64_t timestamp_ms = 0;
    std::uint8_t label_index = 0;
    double confidence = 0.0;
    AppKind app = AppKind::Har;

    friend bool operator==(const InferenceOutput&, const InferenceOutput&) = default;
};

struct DeviceEvent {
    DeviceEventKind kind = DeviceEventKind::MotionDetected;
    std::optional<InferenceOutput> inference; // set on InferenceDone
};

enum class ActionKind : std::uint8_t { StartSampling, RunInference, EnqueueData, ResumeSampling, EnterSleep };

std::string_view action_name(ActionKind a);

struct Action {
    ActionKind kind = ActionKind::StartSampling;
    std::optional<InferenceOutput> data; // EnqueueData only

    friend bool operator==(const Action&, const Action&) = default;
};

struct StepResult {
    PowerState state = PowerState::Sleep;
    std::vector<Action> actions;
    bool noop = false;
};

// Pure transition function.
StepResult step_state_machine(PowerState state, const DeviceEvent& event);

struct NoopRecord {
    PowerState state;
    DeviceEventKind event;
};

// Stateful wrapper that keeps the current state and logs ignored events.
class FirmwareStateMachine {
  public:
    PowerState state() const { return state_; }
    const std::vector<NoopRecord>& noops() const { return noops_; }

    StepResult step(const DeviceEvent& event);
    // Battery depletion overrides the transition table.
    void force_sleep() { state_ = PowerState::Sleep; }

  private:
    PowerState state_ = PowerState::Sleep;
    std::vector<NoopRecord> noops_;
};

inline constexpr double kDefaultMotionThresholdG = 0.05;

// True iff max | |accel| - 1 g | over the samples exceeds threshold_g.
// Requires at least two samples.
bool motion_detector(std::span<const SensorSample> recent, double threshold_g = kDefaultMotionThresholdG);

} // namespace openhealth
