#include "openhealth/eval.hpp"

#include <cmath>

#include <fmt/format.h>

namespace openhealth {

EvalReport report_from_confusion(AppKind app, std::vector<std::vector<std::size_t>> confusion) {
    const std::size_t n = class_count(app);
    if (confusion.size() != n)
        throw std::invalid_argument("confusion matrix has wrong number of rows");
    EvalReport r;
    r.app = app;
    r.per_class.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (confusion[t].size() != n)
            throw std::invalid_argument("confusion matrix is not square");
        for (std::size_t p = 0; p < n; ++p)
            r.per_class[t].total += confusion[t][p];
        r.per_class[t].correct = confusion[t][t];
        r.correct += confusion[t][t];
        r.total += r.per_class[t].total;
    }
    r.confusion = std::move(confusion);
    return r;
}

EvalReport report_from_counts(AppKind app, std::vector<ClassScore> per_class) {
    if (per_class.size() != class_count(app))
        throw std::invalid_argument("per-class counts do not match the label set size");
    EvalReport r;
    r.app = app;
    for (const auto& s : per_class) {
        if (s.correct > s.total)
            throw std::invalid_argument("correct count exceeds total");
        r.correct += s.correct;
        r.total += s.total;
    }
    r.per_class = std::move(per_class);
    return r;
}

EvalReport evaluate(const MlpModel& model, std::span<const Example> test, AppKind app) {
    if (test.empty())
        throw EmptyTestSet("test set is empty");
    const std::size_t n = class_count(app);
    if (model.sizes().outputs != n)
        throw std::invalid_argument("model output count does not match the label set");
    std::vector<std::vector<std::size_t>> confusion(n, std::vector<std::size_t>(n, 0));
    for (const auto& e : test) {
        if (e.label >= n)
            throw std::invalid_argument("test label outside the label set");
        ++confusion[e.label][predict(model, e.x)];
    }
    return report_from_confusion(app, std::move(confusion));
}

std::string format_accuracy(std::size_t correct, std::size_t total) {
    if (total == 0)
        return "-";
    if (correct == total)
        return "100";
    // Integer rounding of correct*1000/total, half away from zero, avoids
    // binary-fraction surprises at the .x5 boundary.
    const auto tenths = (2000 * correct + total) / (2 * total);
    return fmt::format("{}.{}", tenths / 10, tenths % 10);
}

std::string render_table(const EvalReport& report) {
    std::string out = fmt::format("{}   # Correct / # Total Segments   Accuracy (%)\n",
                                  report.app == AppKind::Har ? "Activity" : "Gesture");
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& s = report.per_class[c];
        out += fmt::format("{}   {} / {}   {}\n", display_name(label_decode(report.app, static_cast<int>(c))),
                           s.correct, s.total, format_accuracy(s.correct, s.total));
    }
    out += fmt::format("Overall   {} / {}   {}\n", report.correct, report.total,
                       format_accuracy(report.correct, report.total));
    return out;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["app"] = app_name(report.app);
    auto classes = nlohmann::json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& s = report.per_class[c];
        classes.push_back({{"label", label_name(label_decode(report.app, static_cast<int>(c)))},
                           {"correct", s.correct},
                           {"total", s.total},
                           {"accuracy_pct", s.accuracy_pct()}});
    }
    j["classes"] = classes;
    j["correct"] = report.correct;
    j["total"] = report.total;
    j["overall_accuracy_pct"] = report.overall_pct();
    j["confusion"] = report.confusion;
    return j;
}

} // namespace openhealth
