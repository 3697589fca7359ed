#include <doctest.h>

#include <stdexcept>

#include "openhealth/channel.hpp"

using namespace openhealth;

namespace {

const std::vector<std::uint8_t> kBytes{1, 2, 3, 4, 5, 6, 7, 8};

} // namespace

TEST_CASE("transmissions are reproducible per seed and entity") {
    const ChannelModel m{5, 50, 0.3, 0.2};
    RadioLink a(m, 11, "up:1"), b(m, 11, "up:1"), c(m, 11, "up:2"), d(m, 12, "up:1");
    int differ_entity = 0, differ_seed = 0;
    for (int i = 0; i < 200; ++i) {
        const auto ta = a.transmit(kBytes), tb = b.transmit(kBytes), tc = c.transmit(kBytes), td = d.transmit(kBytes);
        CHECK(ta.lost == tb.lost);
        CHECK(ta.latency_ms == tb.latency_ms);
        CHECK(ta.bytes == tb.bytes);
        CHECK(ta.flipped_bit == tb.flipped_bit);
        differ_entity += ta.latency_ms != tc.latency_ms ? 1 : 0;
        differ_seed += ta.latency_ms != td.latency_ms ? 1 : 0;
    }
    CHECK(a.transmissions() == 200);
    CHECK(differ_entity > 100);
    CHECK(differ_seed > 100);
}

TEST_CASE("lossless channel delivers identical bytes with latency in range") {
    RadioLink link({3, 9, 0.0, 0.0}, 1, "x");
    for (int i = 0; i < 500; ++i) {
        const auto t = link.transmit(kBytes);
        CHECK_FALSE(t.lost);
        CHECK(t.bytes == kBytes);
        CHECK(t.latency_ms >= 3);
        CHECK(t.latency_ms <= 9);
        CHECK_FALSE(t.flipped_bit.has_value());
    }
}

TEST_CASE("loss probability one drops everything") {
    RadioLink link({10, 10, 1.0, 0.0}, 1, "x");
    for (int i = 0; i < 100; ++i) {
        const auto t = link.transmit(kBytes);
        CHECK(t.lost);
        CHECK(t.bytes.empty());
    }
}

TEST_CASE("empirical loss and corruption rates") {
    RadioLink link({10, 10, 0.25, 0.1}, 5, "x");
    int lost = 0, corrupted = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto t = link.transmit(kBytes);
        if (t.lost) {
            ++lost;
            continue;
        }
        if (t.flipped_bit) {
            ++corrupted;
            auto expect = kBytes;
            expect[*t.flipped_bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (*t.flipped_bit % 8));
            CHECK(t.bytes == expect);
        }
    }
    CHECK(std::abs(lost / double(n) - 0.25) < 0.02);
    CHECK(std::abs(corrupted / double(n - lost) - 0.1) < 0.02);
}

TEST_CASE("channel validation") {
    CHECK_THROWS_AS(RadioLink({10, 5, 0, 0}, 1, "x"), std::invalid_argument);
    CHECK_THROWS_AS(RadioLink({-1, 5, 0, 0}, 1, "x"), std::invalid_argument);
    CHECK_THROWS_AS(RadioLink({1, 5, 1.5, 0}, 1, "x"), std::invalid_argument);
    CHECK_THROWS_AS(RadioLink({1, 5, 0, 1.0}, 1, "x"), std::invalid_argument);
    CHECK_NOTHROW(validate_channel(ChannelModel{}));
}
