#include "openhealth/channel.hpp"

#include <stdexcept>

#include "openhealth/rng.hpp"

namespace openhealth {

void validate_channel(const ChannelModel& m) {
    if (m.latency_min_ms < 0 || m.latency_max_ms < m.latency_min_ms)
        throw std::invalid_argument("channel latency range must satisfy 0 <= min <= max");
    if (!(m.loss_probability >= 0 && m.loss_probability <= 1))
        throw std::invalid_argument("loss_probability must be in [0, 1]");
    if (!(m.corruption_probability >= 0 && m.corruption_probability < 1))
        throw std::invalid_argument("corruption_probability must be in [0, 1)");
}

RadioLink::RadioLink(ChannelModel model, std::uint64_t seed, std::string_view entity)
    : model_(model), seed_(seed), stream_(hash_name(entity)) {
    validate_channel(model_);
}

Transmission RadioLink::transmit(std::span<const std::uint8_t> bytes) {
    // A fresh generator per transmission keyed by its index keeps draws
    // independent of how many values earlier transmissions consumed.
    Rng rng(derive_seed(derive_seed(seed_, stream_), count_++));
    const double u_loss = rng.uniform();
    const double u_corrupt = rng.uniform();
    const std::int64_t latency = rng.uniform_int(model_.latency_min_ms, model_.latency_max_ms);
    const std::uint64_t bit_draw = rng.next_u64();

    Transmission t;
    t.latency_ms = latency;
    // loss_probability 1 drops everything, including a u of 0.
    t.lost = model_.loss_probability >= 1.0 || u_loss < model_.loss_probability;
    if (t.lost)
        return t;
    t.bytes.assign(bytes.begin(), bytes.end());
    if (!t.bytes.empty() && u_corrupt < model_.corruption_probability) {
        const std::size_t bit = static_cast<std::size_t>(bit_draw % (t.bytes.size() * 8));
        t.bytes[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
        t.flipped_bit = bit;
    }
    return t;
}

} // namespace openhealth
