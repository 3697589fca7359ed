#include "openhealth/experiment.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "openhealth/rng.hpp"

namespace openhealth {

WindowedData featurize(const LabeledRecording& recording, const PipelineConfig& pipeline) {
    WindowedData out;
    out.app = recording.annotations.empty() ? AppKind::Har : app_of(recording.annotations.front().label);
    out.with_stretch = recording.has_stretch();
    for (const auto& w : segment(recording, pipeline.window, pipeline.overlap)) {
        if (!w.label)
            continue;
        out.features.push_back(extract_features(w));
        out.labels.push_back(static_cast<std::size_t>(label_encode(*w.label)));
    }
    return out;
}

std::vector<Example> to_examples(const WindowedData& data) {
    std::vector<Example> out;
    out.reserve(data.features.size());
    for (std::size_t i = 0; i < data.features.size(); ++i)
        out.push_back({data.features[i], data.labels[i]});
    return out;
}

std::vector<Example> to_examples(const WindowedData& data, std::span<const Channel> channels) {
    if (channels.empty())
        throw std::invalid_argument("channel subset is empty");
    for (Channel c : channels)
        if (c == Channel::Stretch && !data.with_stretch)
            throw std::invalid_argument("channel subset references stretch, which the data lacks");
    std::vector<Example> out;
    out.reserve(data.features.size());
    for (std::size_t i = 0; i < data.features.size(); ++i)
        out.push_back({select_channels(data.features[i], channels), data.labels[i]});
    return out;
}

Split split_examples(std::span<const Example> examples, double fraction, std::uint64_t seed) {
    if (!(fraction > 0 && fraction < 1))
        throw std::invalid_argument("split fraction must be in (0, 1)");
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < examples.size(); ++i)
        by_class[examples[i].label].push_back(i);

    Rng rng(seed, "split");
    Split out;
    for (auto& [label, idx] : by_class) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < n_train ? out.train : out.test).push_back(examples[idx[k]]);
    }
    return out;
}

LayerSizes layers_for(AppKind app, std::size_t channels, std::size_t hidden_units) {
    return {channels * kFeaturesPerChannel, hidden_units, class_count(app)};
}

ExperimentResult run_experiment(const WindowedData& data, const PipelineConfig& pipeline, const TrainConfig& train,
                                std::span<const Channel> channels) {
    const auto examples = to_examples(data, channels);
    auto split = split_examples(examples, train.split_fraction, train.seed);
    ExperimentResult out;
    out.train_size = split.train.size();
    out.test_size = split.test.size();
    auto model = make_model(layers_for(data.app, channels.size(), pipeline.hidden_units), train.seed);
    out.trained = openhealth::train(std::move(model), split.train, train);
    out.report = evaluate(out.trained.model, split.test, data.app);
    return out;
}

ExperimentResult run_experiment(const WindowedData& data, const PipelineConfig& pipeline, const TrainConfig& train) {
    std::vector<Channel> all;
    for (std::size_t c = 0; c < channel_count(data.with_stretch); ++c)
        all.push_back(static_cast<Channel>(c));
    return run_experiment(data, pipeline, train, all);
}

std::vector<AblationResult> ablation_compare(const WindowedData& data,
                                             const std::vector<std::vector<Channel>>& subsets,
                                             const PipelineConfig& pipeline, const TrainConfig& train) {
    // Validate every subset before spending time on training.
    for (const auto& s : subsets) {
        if (s.empty())
            throw std::invalid_argument("channel subset is empty");
        for (Channel c : s)
            if (c == Channel::Stretch && !data.with_stretch)
                throw std::invalid_argument("channel subset references stretch, which the data lacks");
    }
    std::vector<AblationResult> out;
    for (const auto& s : subsets) {
        const auto r = run_experiment(data, pipeline, train, s);
        out.push_back({s, r.report.overall_pct()});
    }
    return out;
}

} // namespace openhealth
