#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "openhealth/frame.hpp"

namespace openhealth {

struct SealedFrame {
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> bytes;
};

// Device end of a session: uplink sequence source and downlink replay state.
class DeviceSession {
  public:
    DeviceSession(std::uint16_t device_id, const Key& key, std::uint32_t replay_width = ReplayWindow::kMaxWidth);

    std::uint16_t device_id() const { return device_id_; }
    const Key& key() const { return key_; }

    // Consumes a fresh sequence number.
    SealedFrame seal(FrameType type, std::span<const std::uint8_t> payload);

    // Downlink frames only; a frame naming another device is AuthFailure
    // territory anyway since the nonce differs, but is rejected up front.
    DecodeOutcome open(std::span<const std::uint8_t> bytes);

  private:
    std::uint16_t device_id_;
    Key key_;
    SeqCounter uplink_;
    ReplayWindow downlink_;
};

} // namespace openhealth
