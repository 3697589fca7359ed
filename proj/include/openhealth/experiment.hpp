#pragma once

// Recording -> windows -> features -> train/test -> report.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "openhealth/eval.hpp"
#include "openhealth/mlp.hpp"
#include "openhealth/pipeline.hpp"

namespace openhealth {

struct PipelineConfig {
    std::size_t window = kDefaultWindow;
    double overlap = kDefaultOverlap;
    std::size_t hidden_units = 16;
};

// Labeled windows only; labels are class indices of `app`.
struct WindowedData {
    AppKind app = AppKind::Har;
    bool with_stretch = false;
    std::vector<FeatureVector> features;
    std::vector<std::size_t> labels;
};

// App is taken from the recording's annotations (Har when unannotated).
WindowedData featurize(const LabeledRecording& recording, const PipelineConfig& pipeline);

std::vector<Example> to_examples(const WindowedData& data);
std::vector<Example> to_examples(const WindowedData& data, std::span<const Channel> channels);

struct Split {
    std::vector<Example> train;
    std::vector<Example> test;
};

// Stratified: each class is shuffled with `seed` and cut at `fraction`.
Split split_examples(std::span<const Example> examples, double fraction, std::uint64_t seed);

LayerSizes layers_for(AppKind app, std::size_t channels, std::size_t hidden_units);

struct ExperimentResult {
    TrainResult trained;
    EvalReport report;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
};

ExperimentResult run_experiment(const WindowedData& data, const PipelineConfig& pipeline, const TrainConfig& train,
                                std::span<const Channel> channels);
ExperimentResult run_experiment(const WindowedData& data, const PipelineConfig& pipeline, const TrainConfig& train);

struct AblationResult {
    std::vector<Channel> channels;
    double accuracy_pct = 0.0;
};

// Same architecture width, seed and split for every subset. Throws
// std::invalid_argument on an empty subset or a channel the data lacks.
std::vector<AblationResult> ablation_compare(const WindowedData& data,
                                             const std::vector<std::vector<Channel>>& subsets,
                                             const PipelineConfig& pipeline, const TrainConfig& train);

} // namespace openhealth
