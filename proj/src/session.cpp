#include "openhealth/session.hpp"

namespace openhealth {

DeviceSession::DeviceSession(std::uint16_t device_id, const Key& key, std::uint32_t replay_width)
    : device_id_(device_id), key_(key), uplink_(false), downlink_(replay_width) {}

SealedFrame DeviceSession::seal(FrameType type, std::span<const std::uint8_t> payload) {
    SealedFrame f;
    f.seq = uplink_.next();
    f.bytes = encode_frame(type, device_id_, f.seq, payload, key_);
    return f;
}

DecodeOutcome DeviceSession::open(std::span<const std::uint8_t> bytes) {
    const auto h = peek_header(bytes);
    if (h && h->device_id != device_id_) {
        DecodeOutcome out;
        out.status = DecodeStatus::UnknownDevice;
        out.frame.device_id = h->device_id;
        out.frame.seq = h->seq;
        return out;
    }
    return decode_frame(bytes, key_, downlink_);
}

} // namespace openhealth
