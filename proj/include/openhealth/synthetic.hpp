#pragma once

// Seeded per-class signal generator. Each class is a gravity orientation
// modulated by one sinusoid (accel along the gravity axis, gyro about the
// sensor y axis, stretch around a base level) plus white noise, so classes
// are separable by construction and the dominant frequency of |accel| is the
// class frequency.

#include <cstdint>
#include <map>
#include <vector>

#include "openhealth/core.hpp"
#include "openhealth/rng.hpp"

namespace openhealth {

struct ClassSignal {
    Vec3 gravity{1.0, 0.0, 0.0}; // orientation, normalized on use
    double freq_hz = 0.0;
    double amplitude_g = 0.0;
    double gyro_amplitude_dps = 0.0;
    double accel_noise_g = 0.0;
    double gyro_noise_dps = 0.0;
    double stretch_base = 0.0;
    double stretch_amplitude = 0.0;
    double stretch_noise = 0.0;
};

struct SyntheticActivityModel {
    std::map<Label, ClassSignal> classes;
    bool with_stretch = true;
    std::uint64_t seed = 0;
};

struct ScheduleEntry {
    Label label = ActivityLabel::Walk;
    std::int64_t duration_ms = 0;
};

// Throws std::invalid_argument when two classes share (freq, amplitude,
// orientation) or a parameter is out of range.
void validate_model(const SyntheticActivityModel& model);

// Pure function of (model, schedule, rate_hz). Sample times are
// round(i * 1000 / rate_hz) ms; values are rounded to the dataset precision so
// the recording survives a CSV round trip unchanged. Adjacent schedule
// entries with the same label share one annotation.
LabeledRecording generate_synthetic(const SyntheticActivityModel& model,
                                    const std::vector<ScheduleEntry>& schedule, double rate_hz);

// Appends `count` samples of one class segment with a fresh random phase.
// Sample k is stamped origin_ms + round((first_index + k) * 1000 / rate_hz).
void append_class_samples(std::vector<SensorSample>& out, const ClassSignal& sig, bool with_stretch, double rate_hz,
                          std::int64_t origin_ms, std::int64_t first_index, std::int64_t count, Rng& rng);

// Signal of a worn but motionless device: gravity on z, small sensor noise.
ClassSignal resting_signal();

SyntheticActivityModel default_har_model(std::uint64_t seed = 7);
SyntheticActivityModel default_gesture_model(std::uint64_t seed = 7);

// Sit and Stand differ only in the stretch channel; the accelerometer alone
// cannot tell them apart.
SyntheticActivityModel ablation_model(std::uint64_t seed = 7);

// Every class in `labels` for segment_ms, each followed by a Transition
// segment of transition_ms when transition_ms > 0, the whole cycle repeated.
std::vector<ScheduleEntry> cyclic_schedule(const std::vector<Label>& labels, std::int64_t segment_ms,
                                           std::int64_t transition_ms, int repeats);

// ~3000 windows at 100 Hz with the default window policy.
std::vector<ScheduleEntry> default_har_schedule();
std::vector<ScheduleEntry> default_gesture_schedule();
std::vector<ScheduleEntry> ablation_schedule();

} // namespace openhealth
