#include "openhealth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace openhealth {

namespace {

constexpr std::array<std::string_view, 7> kChannelNames = {"ax", "ay", "az", "gx", "gy", "gz", "stretch"};

double nominal_period(const LabeledRecording& r) {
    std::vector<std::int64_t> d;
    d.reserve(r.samples.size());
    for (std::size_t i = 1; i < r.samples.size(); ++i)
        d.push_back(r.samples[i].t_ms - r.samples[i - 1].t_ms);
    if (d.empty())
        return 1.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return static_cast<double>(*mid);
}

} // namespace

double channel_value(const SensorSample& s, Channel c) {
    switch (c) {
    case Channel::Ax: return s.accel[0];
    case Channel::Ay: return s.accel[1];
    case Channel::Az: return s.accel[2];
    case Channel::Gx: return s.gyro[0];
    case Channel::Gy: return s.gyro[1];
    case Channel::Gz: return s.gyro[2];
    case Channel::Stretch: return s.stretch.value_or(0.0);
    }
    return 0.0;
}

std::size_t channel_count(bool with_stretch) { return with_stretch ? 7 : 6; }

std::string_view channel_name(Channel c) { return kChannelNames[static_cast<std::size_t>(c)]; }

std::optional<Channel> parse_channel(std::string_view name) {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i)
        if (kChannelNames[i] == name)
            return static_cast<Channel>(i);
    return std::nullopt;
}

std::size_t window_stride(std::size_t window, double overlap_fraction) {
    const auto stride = static_cast<std::size_t>(std::llround(static_cast<double>(window) * (1.0 - overlap_fraction)));
    return std::max<std::size_t>(1, stride);
}

std::vector<WindowSegment> segment(const LabeledRecording& recording, std::size_t window,
                                   double overlap_fraction) {
    if (window < 8)
        throw std::invalid_argument("window length must be >= 8");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw std::invalid_argument("overlap fraction must be in [0, 1)");

    const auto& samples = recording.samples;
    std::vector<WindowSegment> out;
    if (samples.size() < window)
        return out;

    // Per-sample label index into `labels`, -1 when unlabeled.
    auto annotations = recording.annotations;
    std::sort(annotations.begin(), annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.start_ms < b.start_ms; });
    std::vector<Label> labels;
    std::vector<int> sample_label(samples.size(), -1);
    {
        std::size_t a = 0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            while (a < annotations.size() && annotations[a].end_ms < samples[i].t_ms)
                ++a;
            if (a < annotations.size() && annotations[a].start_ms <= samples[i].t_ms) {
                auto it = std::find(labels.begin(), labels.end(), annotations[a].label);
                if (it == labels.end()) {
                    labels.push_back(annotations[a].label);
                    it = labels.end() - 1;
                }
                sample_label[i] = static_cast<int>(it - labels.begin());
            }
        }
    }

    const double max_gap = 1.5 * nominal_period(recording);
    const std::size_t stride = window_stride(window, overlap_fraction);
    std::vector<std::size_t> counts(labels.size());

    for (std::size_t start = 0; start + window <= samples.size(); start += stride) {
        bool contiguous = true;
        for (std::size_t i = start + 1; i < start + window; ++i)
            if (static_cast<double>(samples[i].t_ms - samples[i - 1].t_ms) > max_gap) {
                contiguous = false;
                break;
            }
        if (!contiguous)
            continue;

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = start; i < start + window; ++i)
            if (sample_label[i] >= 0)
                ++counts[static_cast<std::size_t>(sample_label[i])];

        WindowSegment w;
        w.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(start),
                         samples.begin() + static_cast<std::ptrdiff_t>(start + window));
        w.start_ms = samples[start].t_ms;

        std::size_t best = 0;
        std::size_t present = 0;
        for (std::size_t l = 0; l < counts.size(); ++l) {
            if (counts[l] > 0)
                ++present;
            if (counts[l] > counts[best])
                best = l;
        }
        if (present > 0 && static_cast<double>(counts[best]) >= kDominanceThreshold * static_cast<double>(window))
            w.label = labels[best];
        else if (present >= 2 && app_of(labels[best]) == AppKind::Har)
            w.label = ActivityLabel::Transition;
        out.push_back(std::move(w));
    }
    return out;
}

FeatureVector extract_features(std::span<const SensorSample> window) {
    const std::size_t n = window.size();
    if (n == 0)
        throw std::invalid_argument("cannot extract features from an empty window");
    const std::size_t channels = channel_count(window.front().stretch.has_value());

    std::vector<double> cos_table(n), sin_table(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        cos_table[m] = std::cos(angle);
        sin_table[m] = std::sin(angle);
    }

    FeatureVector out;
    out.reserve(channels * kFeaturesPerChannel);
    std::vector<double> x(n);
    for (std::size_t c = 0; c < channels; ++c) {
        const auto ch = static_cast<Channel>(c);
        double sum = 0.0;
        double lo = channel_value(window[0], ch);
        double hi = lo;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = channel_value(window[i], ch);
            sum += x[i];
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (auto& v : x) {
            v -= mean;
            var += v * v;
        }
        out.push_back(mean);
        out.push_back(std::sqrt(var / static_cast<double>(n)));
        out.push_back(lo);
        out.push_back(hi);
        for (std::size_t k = 1; k <= kSpectralBins; ++k) {
            double re = 0.0;
            double im = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t m = (k * i) % n;
                re += x[i] * cos_table[m];
                im -= x[i] * sin_table[m];
            }
            out.push_back(2.0 / static_cast<double>(n) * std::hypot(re, im));
        }
    }
    return out;
}

FeatureVector select_channels(const FeatureVector& full, std::span<const Channel> channels) {
    FeatureVector out;
    out.reserve(channels.size() * kFeaturesPerChannel);
    for (Channel c : channels) {
        const std::size_t begin = static_cast<std::size_t>(c) * kFeaturesPerChannel;
        if (begin + kFeaturesPerChannel > full.size())
            throw std::invalid_argument("feature vector has no block for channel " +
                                        std::string(channel_name(c)));
        out.insert(out.end(), full.begin() + static_cast<std::ptrdiff_t>(begin),
                   full.begin() + static_cast<std::ptrdiff_t>(begin + kFeaturesPerChannel));
    }
    return out;
}

FeatureVector apply_stats(std::span<const double> x, const FeatureStats& stats) {
    if (x.size() != stats.dimension())
        throw std::invalid_argument("feature dimension " + std::to_string(x.size()) +
                                    " does not match normalization stats dimension " +
                                    std::to_string(stats.dimension()));
    FeatureVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (x[i] - stats.mean[i]) / std::max(stats.std[i], kStdFloor);
    return out;
}

NormalizedFeatures normalize_features(std::span<const FeatureVector> vectors,
                                      const std::optional<FeatureStats>& stats) {
    NormalizedFeatures result;
    if (stats) {
        result.stats = *stats;
    } else {
        if (vectors.empty())
            throw std::invalid_argument("cannot compute normalization stats from an empty set");
        const std::size_t d = vectors.front().size();
        result.stats.mean.assign(d, 0.0);
        result.stats.std.assign(d, 0.0);
        for (const auto& v : vectors) {
            if (v.size() != d)
                throw std::invalid_argument("feature vectors of differing dimension");
            for (std::size_t i = 0; i < d; ++i)
                result.stats.mean[i] += v[i];
        }
        const auto count = static_cast<double>(vectors.size());
        for (auto& m : result.stats.mean)
            m /= count;
        for (const auto& v : vectors)
            for (std::size_t i = 0; i < d; ++i) {
                const double dv = v[i] - result.stats.mean[i];
                result.stats.std[i] += dv * dv;
            }
        for (auto& s : result.stats.std)
            s = std::max(std::sqrt(s / count), kStdFloor);
    }
    result.vectors.reserve(vectors.size());
    for (const auto& v : vectors)
        result.vectors.push_back(apply_stats(v, result.stats));
    return result;
}

} // namespace openhealth
