#include "openhealth/firmware.hpp"

#include <cmath>
#include <stdexcept>

namespace openhealth {

std::string_view state_name(PowerState s) {
    switch (s) {
    case PowerState::Sleep: return "Sleep";
    case PowerState::Sampling: return "Sampling";
    case PowerState::Processing: return "Processing";
    case PowerState::Transmitting: return "Transmitting";
    }
    return "?";
}

std::string_view event_name(DeviceEventKind e) {
    switch (e) {
    case DeviceEventKind::MotionDetected: return "MotionDetected";
    case DeviceEventKind::WindowFull: return "WindowFull";
    case DeviceEventKind::InferenceDone: return "InferenceDone";
    case DeviceEventKind::TxDone: return "TxDone";
    case DeviceEventKind::IdleTimeout: return "IdleTimeout";
    }
    return "?";
}

std::string_view action_name(ActionKind a) {
    switch (a) {
    case ActionKind::StartSampling: return "start-sampling";
    case ActionKind::RunInference: return "run-inference";
    case ActionKind::EnqueueData: return "enqueue-data";
    case ActionKind::ResumeSampling: return "resume-sampling";
    case ActionKind::EnterSleep: return "enter-sleep";
    }
    return "?";
}

StepResult step_state_machine(PowerState state, const DeviceEvent& event) {
    using S = PowerState;
    using E = DeviceEventKind;
    switch (state) {
    case S::Sleep:
        if (event.kind == E::MotionDetected)
            return {S::Sampling, {{ActionKind::StartSampling, {}}}, false};
        break;
    case S::Sampling:
        if (event.kind == E::WindowFull)
            return {S::Processing, {{ActionKind::RunInference, {}}}, false};
        if (event.kind == E::IdleTimeout)
            return {S::Sleep, {{ActionKind::EnterSleep, {}}}, false};
        break;
    case S::Processing:
        if (event.kind == E::InferenceDone) {
            if (!event.inference)
                throw std::invalid_argument("InferenceDone event without an inference result");
            return {S::Transmitting, {{ActionKind::EnqueueData, event.inference}}, false};
        }
        break;
    case S::Transmitting:
        if (event.kind == E::TxDone)
            return {S::Sampling, {{ActionKind::ResumeSampling, {}}}, false};
        break;
    }
    return {state, {}, true};
}

StepResult FirmwareStateMachine::step(const DeviceEvent& event) {
    auto r = step_state_machine(state_, event);
    if (r.noop)
        noops_.push_back({state_, event.kind});
    state_ = r.state;
    return r;
}

bool motion_detector(std::span<const SensorSample> recent, double threshold_g) {
    if (recent.size() < 2)
        throw std::invalid_argument("motion detector needs at least two samples");
    double deviation = 0.0;
    for (const auto& s : recent) {
        const double mag = std::sqrt(s.accel[0] * s.accel[0] + s.accel[1] * s.accel[1] + s.accel[2] * s.accel[2]);
        deviation = std::max(deviation, std::abs(mag - 1.0));
    }
    return deviation > threshold_g;
}

} // namespace openhealth
