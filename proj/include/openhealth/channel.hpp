#pragma once

// Lossy radio link between one device and the host, one instance per
// direction. Every transmit consumes the same number of draws from the
// channel's own substream, so outcomes depend only on (seed, entity, index).

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace openhealth {

struct ChannelModel {
    std::int64_t latency_min_ms = 10;
    std::int64_t latency_max_ms = 10;
    double loss_probability = 0.0;
    double corruption_probability = 0.0;

    friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

// Throws std::invalid_argument.
void validate_channel(const ChannelModel& m);

struct Transmission {
    bool lost = false;
    std::int64_t latency_ms = 0;
    std::optional<std::size_t> flipped_bit; // set when corrupted
    std::vector<std::uint8_t> bytes;        // what arrives (possibly corrupted)
};

class RadioLink {
  public:
    RadioLink(ChannelModel model, std::uint64_t seed, std::string_view entity);

    Transmission transmit(std::span<const std::uint8_t> bytes);
    const ChannelModel& model() const { return model_; }
    std::uint64_t transmissions() const { return count_; }

  private:
    ChannelModel model_;
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t count_ = 0;
};

} // namespace openhealth
