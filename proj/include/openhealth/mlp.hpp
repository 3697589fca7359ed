#pragma once

// Single-hidden-layer perceptron: rectifier hidden units, softmax output,
// mean cross-entropy loss, SGD with momentum.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "openhealth/pipeline.hpp"

namespace openhealth {

struct LayerSizes {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::size_t outputs = 0;

    std::size_t parameter_count() const { return inputs * hidden + hidden + hidden * outputs + outputs; }
    friend bool operator==(const LayerSizes&, const LayerSizes&) = default;
};

inline constexpr LayerSizes kHarLayers{84, 16, 7};
inline constexpr LayerSizes kGestureLayers{72, 16, 4};

// Parameters live in one flat vector laid out as
//   w1 (hidden x inputs, row-major) | b1 | w2 (outputs x hidden) | b2
// so gradients and optimizer state share the same indexing.
class MlpModel {
  public:
    MlpModel() = default;
    explicit MlpModel(LayerSizes sizes) : sizes_(sizes), params_(sizes.parameter_count(), 0.0) {}

    const LayerSizes& sizes() const { return sizes_; }
    std::size_t parameter_count() const { return params_.size(); }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    double& w1(std::size_t h, std::size_t d) { return params_[h * sizes_.inputs + d]; }
    double w1(std::size_t h, std::size_t d) const { return params_[h * sizes_.inputs + d]; }
    double& b1(std::size_t h) { return params_[b1_offset() + h]; }
    double b1(std::size_t h) const { return params_[b1_offset() + h]; }
    double& w2(std::size_t c, std::size_t h) { return params_[w2_offset() + c * sizes_.hidden + h]; }
    double w2(std::size_t c, std::size_t h) const { return params_[w2_offset() + c * sizes_.hidden + h]; }
    double& b2(std::size_t c) { return params_[b2_offset() + c]; }
    double b2(std::size_t c) const { return params_[b2_offset() + c]; }

    std::size_t b1_offset() const { return sizes_.inputs * sizes_.hidden; }
    std::size_t w2_offset() const { return b1_offset() + sizes_.hidden; }
    std::size_t b2_offset() const { return w2_offset() + sizes_.hidden * sizes_.outputs; }

    // Input z-scoring applied at the start of every forward pass; empty means
    // inputs are used as given.
    const FeatureStats& normalization() const { return norm_; }
    void set_normalization(FeatureStats stats) { norm_ = std::move(stats); }

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

  private:
    LayerSizes sizes_;
    std::vector<double> params_;
    FeatureStats norm_;
};

// He-scaled uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
MlpModel make_model(LayerSizes sizes, std::uint64_t seed);

// Class probabilities; throws std::invalid_argument on dimension mismatch.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

// Argmax of forward(); ties go to the lowest class index.
std::size_t predict(const MlpModel& model, std::span<const double> x);
std::size_t argmax(std::span<const double> v);

struct Example {
    FeatureVector x;
    std::size_t label = 0;
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad; // same layout as MlpModel::parameters()
};

// Mean cross-entropy over the batch and its gradient with respect to every
// parameter. Throws on empty batch, bad labels, dimension mismatch or
// non-finite input.
LossAndGrad loss_and_grad(const MlpModel& model, std::span<const Example> batch);

double mean_loss(const MlpModel& model, std::span<const Example> data);

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int epochs = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 7;
    double split_fraction = 0.8;
    std::optional<int> patience;
};

void validate_train_config(const TrainConfig& c);

struct TrainResult {
    MlpModel model;
    // Entry 0 is the loss of the starting parameters, entry e the full
    // training-set loss after epoch e.
    std::vector<double> loss_history;
};

class DegenerateDataset : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Fits normalization stats on `data`, stores them in the returned model and
// runs minibatch SGD from the parameters of `initial`. Throws
// DegenerateDataset when fewer than two classes are present.
TrainResult train(MlpModel initial, std::span<const Example> data, const TrainConfig& config);

} // namespace openhealth
