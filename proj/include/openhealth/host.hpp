#pragma once

// Host gateway: authenticates uplink frames, keeps one replay window and one
// downlink sequence per device, stores observations on the host time base
// and raises notifications for alerts.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "openhealth/frame.hpp"
#include "openhealth/session.hpp"

namespace openhealth {

struct Observation {
    std::uint16_t device_id = 0;
    std::uint32_t seq = 0;
    std::int64_t device_t_ms = 0;
    std::int64_t corrected_t_ms = 0;
    AppKind app = AppKind::Har;
    std::uint8_t label_index = 0;
    std::uint16_t confidence = 0;
    bool alert = false;

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Notification {
    std::uint16_t device_id = 0;
    std::uint32_t seq = 0;
    std::int64_t host_t_ms = 0;
    std::int64_t corrected_t_ms = 0;
    AppKind app = AppKind::Har;
    std::uint8_t label_index = 0;
};

struct HostSyncRecord {
    double offset_ms = 0.0; // host clock minus device clock
    std::int64_t rtt_ms = 0;
    std::int64_t reported_at_ms = 0;
};

struct HostResult {
    DecodeStatus status = DecodeStatus::Truncated;
    std::optional<Frame> frame; // header (and payload when authenticated)
    std::vector<SealedFrame> replies;
    std::optional<Observation> stored;
    std::optional<Notification> notified;
};

class HostGateway {
  public:
    explicit HostGateway(std::uint32_t replay_width = ReplayWindow::kMaxWidth) : replay_width_(replay_width) {}

    void register_device(std::uint16_t device_id, const Key& key);
    bool knows(std::uint16_t device_id) const { return devices_.contains(device_id); }

    // One incoming frame at host time `now_ms`.
    HostResult receive(std::span<const std::uint8_t> bytes, std::int64_t now_ms);

    // Sorted by corrected timestamp; ties keep arrival order.
    const std::vector<Observation>& observations(std::uint16_t device_id) const;
    const std::vector<Notification>& notifications() const { return notifications_; }
    std::optional<HostSyncRecord> sync_record(std::uint16_t device_id) const;
    std::optional<AppKind> app_of_device(std::uint16_t device_id) const;

    // Encodes a host-originated frame on the device's downlink sequence.
    SealedFrame seal_downlink(std::uint16_t device_id, FrameType type, std::span<const std::uint8_t> payload);

    // device_id,corrected_t_ms,app_id,label,confidence
    std::string observations_csv() const;

  private:
    struct DeviceState {
        Key key{};
        ReplayWindow window;
        SeqCounter downlink{true};
        std::optional<AppKind> app;
        std::optional<HostSyncRecord> sync;
        std::vector<Observation> log;
        std::set<std::uint32_t> accepted_alerts;
    };

    std::int64_t correct(const DeviceState& d, std::int64_t device_t_ms) const;

    std::uint32_t replay_width_;
    std::map<std::uint16_t, DeviceState> devices_;
    std::vector<Notification> notifications_;
};

inline constexpr const char* kObservationCsvHeader = "device_id,corrected_t_ms,app_id,label,confidence";

} // namespace openhealth
