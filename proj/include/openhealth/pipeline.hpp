#pragma once

// Windowing and per-window feature extraction: the on-device processing that
// turns raw motion samples into classifier inputs.
//
// Feature layout: one 12-value block per channel, channels in the order
// ax, ay, az, gx, gy, gz[, stretch]. Each block is
//   [mean, std, min, max, s1, ..., s8]
// where std is the population standard deviation and s_k = (2/W) |X_k| is the
// scaled magnitude of DFT coefficient k of the mean-removed channel, so a
// sinusoid of amplitude a sitting exactly on bin k yields s_k = a.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "openhealth/core.hpp"

namespace openhealth {

inline constexpr std::size_t kDefaultWindow = 128;
inline constexpr double kDefaultOverlap = 0.5;
inline constexpr std::size_t kSpectralBins = 8;
inline constexpr std::size_t kFeaturesPerChannel = 4 + kSpectralBins;
inline constexpr double kDominanceThreshold = 0.75;

enum class Channel : std::uint8_t { Ax, Ay, Az, Gx, Gy, Gz, Stretch };

inline constexpr std::size_t kMotionChannels = 6;

double channel_value(const SensorSample& s, Channel c);
std::size_t channel_count(bool with_stretch);
std::string_view channel_name(Channel c);
std::optional<Channel> parse_channel(std::string_view name);

struct WindowSegment {
    std::vector<SensorSample> samples;
    std::int64_t start_ms = 0;
    std::optional<Label> label;
};

using FeatureVector = std::vector<double>;

std::size_t window_stride(std::size_t window, double overlap_fraction);

// Fixed-stride windows fully inside the recording. Windows containing a time
// gap above 1.5 nominal sample periods (median spacing) are skipped. Label is
// the covering annotation when it spans >= 75% of the window; a window mixing
// two or more labels with none dominant is a Transition (activity recordings)
// or unlabeled (gesture recordings).
std::vector<WindowSegment> segment(const LabeledRecording& recording, std::size_t window,
                                   double overlap_fraction);

FeatureVector extract_features(std::span<const SensorSample> window);
inline FeatureVector extract_features(const WindowSegment& w) { return extract_features(w.samples); }

// Picks the per-channel blocks of `channels` out of a full feature vector.
FeatureVector select_channels(const FeatureVector& full, std::span<const Channel> channels);

inline constexpr double kStdFloor = 1e-8;

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;

    bool empty() const { return mean.empty(); }
    std::size_t dimension() const { return mean.size(); }
    friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct NormalizedFeatures {
    std::vector<FeatureVector> vectors;
    FeatureStats stats;
};

// z-score with stats computed from `vectors` when not supplied.
NormalizedFeatures normalize_features(std::span<const FeatureVector> vectors,
                                      const std::optional<FeatureStats>& stats = std::nullopt);

FeatureVector apply_stats(std::span<const double> x, const FeatureStats& stats);

} // namespace openhealth
