#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "openhealth/core.hpp"
#include "openhealth/mlp.hpp"

namespace openhealth {

struct ClassScore {
    std::size_t correct = 0;
    std::size_t total = 0;

    double accuracy_pct() const {
        return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
    friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct EvalReport {
    AppKind app = AppKind::Har;
    std::vector<ClassScore> per_class;
    // confusion[truth][predicted]; empty for reports built from bare counts.
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t correct = 0;
    std::size_t total = 0;

    double overall_pct() const {
        return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
};

class EmptyTestSet : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Throws EmptyTestSet when `test` is empty.
EvalReport evaluate(const MlpModel& model, std::span<const Example> test, AppKind app);

EvalReport report_from_confusion(AppKind app, std::vector<std::vector<std::size_t>> confusion);
EvalReport report_from_counts(AppKind app, std::vector<ClassScore> per_class);

// One decimal, rounded half away from zero; a perfect score prints "100" and
// an empty class "-".
std::string format_accuracy(std::size_t correct, std::size_t total);

// Accuracy table, one line per class then an Overall line:
//   <name>   <correct> / <total>   <accuracy>
std::string render_table(const EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);

} // namespace openhealth
