#include <doctest.h>

#include <cmath>
#include <numbers>

#include "openhealth/experiment.hpp"
#include "openhealth/pipeline.hpp"
#include "openhealth/rng.hpp"

using namespace openhealth;

namespace {

LabeledRecording flat(std::size_t n, bool stretch = false, std::int64_t period = 10) {
    LabeledRecording r;
    for (std::size_t i = 0; i < n; ++i) {
        SensorSample s{static_cast<std::int64_t>(i) * period, {0, 0, 1}, {0, 0, 0}, std::nullopt};
        if (stretch)
            s.stretch = 0.5;
        r.samples.push_back(s);
    }
    return r;
}

std::vector<SensorSample> sinusoid_window(std::size_t n, double amp, double cycles, double phase) {
    std::vector<SensorSample> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i].t_ms = static_cast<std::int64_t>(i) * 10;
        w[i].accel = {amp * std::sin(2 * std::numbers::pi * cycles * double(i) / double(n) + phase), 0, 1};
    }
    return w;
}

} // namespace

TEST_CASE("stride follows overlap") {
    CHECK(window_stride(128, 0.5) == 64);
    CHECK(window_stride(128, 0.0) == 128);
    CHECK(window_stride(128, 0.75) == 32);
    CHECK(window_stride(10, 0.99) == 1);
}

TEST_CASE("window count for a contiguous recording") {
    const auto rec = flat(1000);
    // floor((1000 - 128) / 64) + 1
    CHECK(segment(rec, 128, 0.5).size() == 14);
    CHECK(segment(rec, 128, 0.0).size() == 7);
    CHECK(segment(flat(100), 128, 0.5).empty());
    CHECK_THROWS_AS(segment(rec, 4, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(segment(rec, 128, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(segment(rec, 128, -0.1), std::invalid_argument);
}

TEST_CASE("windows spanning a time gap are skipped") {
    auto rec = flat(512);
    for (std::size_t i = 300; i < rec.samples.size(); ++i)
        rec.samples[i].t_ms += 1000;
    const auto windows = segment(rec, 128, 0.5);
    // starts 0,64,...,384; the ones covering samples 299->300 are dropped
    for (const auto& w : windows)
        for (std::size_t i = 1; i < w.samples.size(); ++i)
            CHECK(w.samples[i].t_ms - w.samples[i - 1].t_ms == 10);
    CHECK(windows.size() == 5);
}

TEST_CASE("window labels: dominant, transition, unlabeled") {
    auto rec = flat(256);
    rec.annotations = {{0, 990, ActivityLabel::Walk}, {1000, 2550, ActivityLabel::Sit}};
    const auto w = segment(rec, 128, 0.5);
    REQUIRE(w.size() == 3);
    CHECK(w[0].label == Label{ActivityLabel::Walk}); // 100 of 128 samples
    CHECK(w[1].label == Label{ActivityLabel::Transition});
    CHECK(w[2].label == Label{ActivityLabel::Sit});

    SUBCASE("exactly 75% is dominant") {
        auto r2 = flat(128);
        r2.annotations = {{0, 950, ActivityLabel::Jump}, {960, 1270, ActivityLabel::Walk}};
        CHECK(segment(r2, 128, 0.5).front().label == Label{ActivityLabel::Jump});
        r2.annotations = {{0, 940, ActivityLabel::Jump}, {950, 1270, ActivityLabel::Walk}};
        CHECK(segment(r2, 128, 0.5).front().label == Label{ActivityLabel::Transition});
    }
    SUBCASE("gesture mixtures stay unlabeled") {
        auto r3 = flat(128);
        r3.annotations = {{0, 630, GestureLabel::Up}, {640, 1270, GestureLabel::Down}};
        CHECK_FALSE(segment(r3, 128, 0.5).front().label.has_value());
    }
    SUBCASE("no annotations at all") {
        CHECK_FALSE(segment(flat(128), 128, 0.5).front().label.has_value());
    }
}

TEST_CASE("feature layout and basic statistics") {
    auto w = flat(128, true).samples;
    w[5].accel[0] = 0.64;
    const auto f = extract_features(w);
    REQUIRE(f.size() == 7 * kFeaturesPerChannel);
    CHECK(f[0] == doctest::Approx(0.005));                  // mean ax
    CHECK(f[1] == doctest::Approx(std::sqrt(0.64 * 0.64 / 128 - 0.005 * 0.005)));
    CHECK(f[2] == 0.0);                                     // min ax
    CHECK(f[3] == 0.64);                                    // max ax
    CHECK(f[2 * kFeaturesPerChannel] == doctest::Approx(1.0)); // mean az
    CHECK(f[6 * kFeaturesPerChannel] == doctest::Approx(0.5)); // mean stretch
    CHECK(extract_features(flat(128).samples).size() == 6 * kFeaturesPerChannel);
    CHECK_THROWS_AS(extract_features(std::span<const SensorSample>{}), std::invalid_argument);
}

TEST_CASE("on-bin sinusoid yields its amplitude in exactly one bin") {
    for (int k = 1; k <= 8; ++k) {
        const auto f = extract_features(sinusoid_window(128, 0.3, k, 0.7));
        for (int b = 1; b <= 8; ++b) {
            CAPTURE(k);
            CAPTURE(b);
            const double s = f[static_cast<std::size_t>(3 + b)];
            if (b == k)
                CHECK(s == doctest::Approx(0.3).epsilon(1e-9));
            else
                CHECK(std::abs(s) < 1e-9);
        }
    }
}

TEST_CASE("off-bin sinusoid leaks into neighbouring bins") {
    const auto f = extract_features(sinusoid_window(128, 0.3, 3.5, 0.0));
    const double b3 = f[3 + 3], b4 = f[3 + 4], b1 = f[3 + 1];
    CHECK(b3 > 0.1);
    CHECK(b4 > 0.1);
    CHECK(b3 < 0.3);
    CHECK(b1 < b3);
}

TEST_CASE("features are invariant to a constant offset in the spectral part") {
    auto a = sinusoid_window(128, 0.2, 2, 0.1);
    auto b = a;
    for (auto& s : b)
        s.accel[0] += 3.0;
    const auto fa = extract_features(a), fb = extract_features(b);
    for (std::size_t i = 4; i < kFeaturesPerChannel; ++i)
        CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-9));
    CHECK(fb[0] == doctest::Approx(fa[0] + 3.0));
}

TEST_CASE("channel selection") {
    const auto f = extract_features(flat(128, true).samples);
    const std::vector<Channel> pick{Channel::Stretch, Channel::Ax};
    const auto s = select_channels(f, pick);
    REQUIRE(s.size() == 2 * kFeaturesPerChannel);
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[kFeaturesPerChannel] == doctest::Approx(0.0));
    const auto no_stretch = extract_features(flat(128).samples);
    const std::vector<Channel> bad{Channel::Stretch};
    CHECK_THROWS_AS(select_channels(no_stretch, bad), std::invalid_argument);
    CHECK(parse_channel("gz") == Channel::Gz);
    CHECK_FALSE(parse_channel("Gz").has_value());
    CHECK(channel_name(Channel::Stretch) == "stretch");
}

TEST_CASE("normalization yields zero mean and unit variance") {
    Rng rng(3);
    std::vector<FeatureVector> v;
    for (int i = 0; i < 200; ++i)
        v.push_back({rng.normal(5, 2), rng.normal(-1, 0.1), 4.0});
    const auto n = normalize_features(v);
    for (std::size_t d = 0; d < 2; ++d) {
        double m = 0, s = 0;
        for (const auto& x : n.vectors)
            m += x[d] / 200;
        for (const auto& x : n.vectors)
            s += (x[d] - m) * (x[d] - m) / 200;
        CHECK(m == doctest::Approx(0).scale(1));
        CHECK(s == doctest::Approx(1));
    }
    // constant column: std floored, output 0
    CHECK(n.stats.std[2] == kStdFloor);
    CHECK(n.vectors[0][2] == 0.0);
    // reusing stats reproduces the same vectors
    CHECK(normalize_features(v, n.stats).vectors == n.vectors);
    CHECK_THROWS_AS(normalize_features(std::vector<FeatureVector>{}), std::invalid_argument);
    CHECK_THROWS_AS(apply_stats(std::vector<double>{1.0}, n.stats), std::invalid_argument);
}

TEST_CASE("featurize keeps only labeled windows") {
    auto rec = flat(640);
    rec.annotations = {{0, 3190, ActivityLabel::Walk}};
    const auto data = featurize(rec, {});
    CHECK(data.app == AppKind::Har);
    CHECK_FALSE(data.with_stretch);
    // samples 0..319 are Walk; a window starting at s holds 320 - s of them
    // and needs 96, so starts 0, 64, 128 and 192 qualify
    CHECK(data.labels == std::vector<std::size_t>{5, 5, 5, 5});
    CHECK(data.features.size() == 4);
}

TEST_CASE("layer sizes per app") {
    CHECK(layers_for(AppKind::Har, 7, 16) == kHarLayers);
    CHECK(layers_for(AppKind::Gesture, 6, 16) == kGestureLayers);
    CHECK(layers_for(AppKind::Har, 3, 8) == LayerSizes{36, 8, 7});
}
