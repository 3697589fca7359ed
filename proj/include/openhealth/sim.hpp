#pragma once

// Discrete-event scenario runner. Time is integer milliseconds of host
// clock; events run in (time, insertion order) order on one thread. Every
// random draw comes from a substream derived from the scenario seed and an
// entity name, so a (config, seed) pair fixes the trace byte for byte.

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "openhealth/config.hpp"
#include "openhealth/mlp.hpp"

namespace openhealth {

struct ScenarioModel {
    MlpModel model; // as deployed: quantized to int8 and expanded back
    std::string source; // "trained" or the file it came from
    std::size_t blob_bytes = 0;
    std::optional<double> test_accuracy_pct; // when trained here
};

struct ScenarioModels {
    std::optional<ScenarioModel> har;
    std::optional<ScenarioModel> gesture;
};

// Loads or trains a model for every app the scenario's devices use.
ScenarioModels prepare_models(const Config& config);

struct SimTrace {
    std::string text;       // trace file contents
    nlohmann::json metrics; // compute_metrics(text)
    std::string observations_csv; // the host's stored observations at the end of the run
};

SimTrace run_scenario(const Config& config, std::uint64_t seed);
SimTrace run_scenario(const Config& config, std::uint64_t seed, const ScenarioModels& models);

} // namespace openhealth
