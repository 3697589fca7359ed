#include "openhealth/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "openhealth/rng.hpp"

namespace openhealth {

namespace {

void check_input(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.sizes().inputs)
        throw std::invalid_argument("input dimension " + std::to_string(x.size()) + " does not match model input " +
                                    std::to_string(model.sizes().inputs));
    for (double v : x)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite input value");
}

struct Activations {
    std::vector<double> pre;    // hidden pre-activations
    std::vector<double> hidden; // rectified
    std::vector<double> logits;
};

// `x` is already normalized.
void run_layers(const MlpModel& m, std::span<const double> x, Activations& a) {
    const auto& s = m.sizes();
    a.pre.resize(s.hidden);
    a.hidden.resize(s.hidden);
    a.logits.resize(s.outputs);
    const auto p = m.parameters();
    for (std::size_t h = 0; h < s.hidden; ++h) {
        const double* row = p.data() + h * s.inputs;
        double z = m.b1(h);
        for (std::size_t d = 0; d < s.inputs; ++d)
            z += row[d] * x[d];
        a.pre[h] = z;
        a.hidden[h] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t c = 0; c < s.outputs; ++c) {
        const double* row = p.data() + m.w2_offset() + c * s.hidden;
        double z = m.b2(c);
        for (std::size_t h = 0; h < s.hidden; ++h)
            z += row[h] * a.hidden[h];
        a.logits[c] = z;
    }
}

double log_sum_exp(std::span<const double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double z : v)
        sum += std::exp(z - mx);
    return mx + std::log(sum);
}

std::vector<double> softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> p(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        p[i] = std::exp(logits[i] - lse);
    return p;
}

FeatureVector prepare(const MlpModel& m, std::span<const double> x) {
    check_input(m, x);
    if (m.normalization().empty())
        return FeatureVector(x.begin(), x.end());
    return apply_stats(x, m.normalization());
}

// Accumulates the gradient of one sample's loss into `grad` (unscaled) and
// returns that loss. `x` is normalized.
double accumulate(const MlpModel& m, std::span<const double> x, std::size_t label, Activations& a,
                  std::vector<double>& dz, std::vector<double>& dh, std::span<double> grad) {
    const auto& s = m.sizes();
    run_layers(m, x, a);
    const double lse = log_sum_exp(a.logits);
    const double loss = lse - a.logits[label];

    dz.resize(s.outputs);
    for (std::size_t c = 0; c < s.outputs; ++c)
        dz[c] = std::exp(a.logits[c] - lse) - (c == label ? 1.0 : 0.0);

    dh.assign(s.hidden, 0.0);
    for (std::size_t c = 0; c < s.outputs; ++c) {
        double* gw2 = grad.data() + m.w2_offset() + c * s.hidden;
        for (std::size_t h = 0; h < s.hidden; ++h) {
            gw2[h] += dz[c] * a.hidden[h];
            dh[h] += m.w2(c, h) * dz[c];
        }
        grad[m.b2_offset() + c] += dz[c];
    }
    for (std::size_t h = 0; h < s.hidden; ++h) {
        if (a.pre[h] <= 0.0)
            continue;
        double* gw1 = grad.data() + h * s.inputs;
        for (std::size_t d = 0; d < s.inputs; ++d)
            gw1[d] += dh[h] * x[d];
        grad[m.b1_offset() + h] += dh[h];
    }
    return loss;
}

void check_batch(const MlpModel& model, std::span<const Example> batch) {
    if (batch.empty())
        throw std::invalid_argument("empty batch");
    for (const auto& e : batch) {
        check_input(model, e.x);
        if (e.label >= model.sizes().outputs)
            throw std::invalid_argument("label " + std::to_string(e.label) + " outside model classes");
    }
}

} // namespace

MlpModel make_model(LayerSizes sizes, std::uint64_t seed) {
    MlpModel m(sizes);
    Rng rng(seed, "mlp-init");
    const double l1 = sizes.inputs ? std::sqrt(6.0 / static_cast<double>(sizes.inputs)) : 0.0;
    const double l2 = sizes.hidden ? std::sqrt(6.0 / static_cast<double>(sizes.hidden)) : 0.0;
    for (std::size_t h = 0; h < sizes.hidden; ++h)
        for (std::size_t d = 0; d < sizes.inputs; ++d)
            m.w1(h, d) = rng.uniform(-l1, l1);
    for (std::size_t c = 0; c < sizes.outputs; ++c)
        for (std::size_t h = 0; h < sizes.hidden; ++h)
            m.w2(c, h) = rng.uniform(-l2, l2);
    return m;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    const auto xin = prepare(model, x);
    Activations a;
    run_layers(model, xin, a);
    return softmax(a.logits);
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

std::size_t predict(const MlpModel& model, std::span<const double> x) { return argmax(forward(model, x)); }

LossAndGrad loss_and_grad(const MlpModel& model, std::span<const Example> batch) {
    check_batch(model, batch);
    LossAndGrad out;
    out.grad.assign(model.parameter_count(), 0.0);
    Activations a;
    std::vector<double> dz, dh;
    for (const auto& e : batch) {
        const auto x = prepare(model, e.x);
        out.loss += accumulate(model, x, e.label, a, dz, dh, out.grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad)
        g *= inv;
    return out;
}

double mean_loss(const MlpModel& model, std::span<const Example> data) {
    check_batch(model, data);
    Activations a;
    double total = 0.0;
    for (const auto& e : data) {
        const auto x = prepare(model, e.x);
        run_layers(model, x, a);
        total += log_sum_exp(a.logits) - a.logits[e.label];
    }
    return total / static_cast<double>(data.size());
}

void validate_train_config(const TrainConfig& c) {
    if (!(c.learning_rate > 0))
        throw std::invalid_argument("learning rate must be > 0");
    if (!(c.momentum >= 0 && c.momentum < 1))
        throw std::invalid_argument("momentum must be in [0, 1)");
    if (c.epochs < 0)
        throw std::invalid_argument("epochs must be >= 0");
    if (c.batch_size == 0)
        throw std::invalid_argument("batch size must be > 0");
    if (!(c.split_fraction > 0 && c.split_fraction < 1))
        throw std::invalid_argument("split fraction must be in (0, 1)");
    if (c.patience && *c.patience <= 0)
        throw std::invalid_argument("patience must be > 0 when set");
}

TrainResult train(MlpModel initial, std::span<const Example> data, const TrainConfig& config) {
    validate_train_config(config);
    check_batch(initial, data);
    std::set<std::size_t> classes;
    for (const auto& e : data)
        classes.insert(e.label);
    if (classes.size() < 2)
        throw DegenerateDataset("training set contains a single class; at least two are required");

    // Train on pre-normalized copies with a stats-free model, attach the stats
    // at the end; forward() on the result then sees raw features.
    std::vector<FeatureVector> raw;
    raw.reserve(data.size());
    for (const auto& e : data)
        raw.push_back(e.x);
    auto normalized = normalize_features(raw);
    std::vector<Example> norm_data(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        norm_data[i] = {std::move(normalized.vectors[i]), data[i].label};

    MlpModel model = std::move(initial);
    model.set_normalization({});

    TrainResult result;
    result.loss_history.push_back(mean_loss(model, norm_data));

    Rng rng(config.seed, "train-shuffle");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> velocity(model.parameter_count(), 0.0);
    std::vector<double> grad(model.parameter_count());
    Activations a;
    std::vector<double> dz, dh;

    double best = result.loss_history.front();
    int since_best = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const auto& e = norm_data[order[k]];
                accumulate(model, e.x, e.label, a, dz, dh, grad);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            auto params = model.parameters();
            for (std::size_t p = 0; p < params.size(); ++p) {
                velocity[p] = config.momentum * velocity[p] - config.learning_rate * grad[p] * scale;
                params[p] += velocity[p];
            }
        }
        const double loss = mean_loss(model, norm_data);
        result.loss_history.push_back(loss);
        if (config.patience) {
            if (loss < best) {
                best = loss;
                since_best = 0;
            } else if (++since_best >= *config.patience) {
                break;
            }
        }
    }
    model.set_normalization(std::move(normalized.stats));
    result.model = std::move(model);
    return result;
}

} // namespace openhealth
