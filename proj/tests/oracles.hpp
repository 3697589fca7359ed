#pragma once

// Reference computations written independently of the library, used as
// oracles by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "openhealth/mlp.hpp"
#include "openhealth/rng.hpp"

namespace oracle {

// Mean cross-entropy of a one-hidden-layer rectifier network, from the flat
// parameter layout w1 | b1 | w2 | b2, no input normalization.
inline double mlp_loss(const std::vector<double>& p, std::size_t in, std::size_t hid, std::size_t out,
                       const std::vector<openhealth::Example>& batch) {
    const std::size_t b1 = in * hid, w2 = b1 + hid, b2 = w2 + hid * out;
    double total = 0;
    for (const auto& e : batch) {
        std::vector<double> h(hid), z(out);
        for (std::size_t j = 0; j < hid; ++j) {
            double s = p[b1 + j];
            for (std::size_t i = 0; i < in; ++i)
                s += p[j * in + i] * e.x[i];
            h[j] = std::max(0.0, s);
        }
        double mx = -1e300;
        for (std::size_t c = 0; c < out; ++c) {
            double s = p[b2 + c];
            for (std::size_t j = 0; j < hid; ++j)
                s += p[w2 + c * hid + j] * h[j];
            z[c] = s;
            mx = std::max(mx, s);
        }
        double sum = 0;
        for (double v : z)
            sum += std::exp(v - mx);
        total += mx + std::log(sum) - z[e.label];
    }
    return total / static_cast<double>(batch.size());
}

struct GradCheck {
    double max_relative_error = 0;
    std::size_t compared = 0;
};

// Central finite differences (step h) on `count` parameters drawn at random,
// against the analytic gradient. Relative error is |a - n| / max(|a|, |n|),
// with pairs where both magnitudes are below 1e-9 compared absolutely.
inline GradCheck gradient_check(std::uint64_t seed, std::size_t count, double h = 1e-5) {
    using namespace openhealth;
    const LayerSizes sizes{6, 4, 3};
    Rng rng(seed, "gradcheck");
    MlpModel m(sizes);
    for (auto& v : m.parameters())
        v = rng.uniform(-1.0, 1.0);
    std::vector<Example> batch;
    for (int k = 0; k < 5; ++k) {
        Example e;
        for (std::size_t i = 0; i < sizes.inputs; ++i)
            e.x.push_back(rng.uniform(-2.0, 2.0));
        e.label = static_cast<std::size_t>(rng.uniform_int(0, 2));
        batch.push_back(e);
    }
    const auto analytic = loss_and_grad(m, batch).grad;
    std::vector<double> p(m.parameters().begin(), m.parameters().end());

    GradCheck out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.size()) - 1));
        const double keep = p[idx];
        p[idx] = keep + h;
        const double up = mlp_loss(p, 6, 4, 3, batch);
        p[idx] = keep - h;
        const double down = mlp_loss(p, 6, 4, 3, batch);
        p[idx] = keep;
        const double numeric = (up - down) / (2 * h);
        const double a = analytic[idx];
        const double scale = std::max(std::abs(a), std::abs(numeric));
        const double err = scale < 1e-9 ? std::abs(a - numeric) : std::abs(a - numeric) / scale;
        out.max_relative_error = std::max(out.max_relative_error, err);
        ++out.compared;
    }
    return out;
}

// Accuracy column rule: one decimal, half away from zero, computed with
// integer arithmetic so no floating-point rounding can interfere.
inline std::string accuracy_text(std::uint64_t correct, std::uint64_t total) {
    if (total == 0)
        return "-";
    if (correct == total)
        return "100";
    const std::uint64_t tenths_x2 = (2000 * correct + total) / (2 * total); // round(1000 c / t)
    return std::to_string(tenths_x2 / 10) + "." + std::to_string(tenths_x2 % 10);
}

} // namespace oracle
