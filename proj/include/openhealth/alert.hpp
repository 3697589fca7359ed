#pragma once

// Emergency alert delivery: the same ALERT frame (same seq, same bytes) is
// retransmitted on a fixed timer until an ACK naming that seq arrives or the
// attempt budget is spent. An ACK that lands exactly when a timer fires wins.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "openhealth/channel.hpp"
#include "openhealth/host.hpp"
#include "openhealth/session.hpp"

namespace openhealth {

struct AlertPolicy {
    std::int64_t retry_interval_ms = 200;
    int max_attempts = 10;
    std::vector<Label> alert_labels;
};

void validate_alert_policy(const AlertPolicy& p);
bool is_alert_label(const AlertPolicy& p, Label label);

class NotAnAlert : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct DeliveryRecord {
    bool delivered = false;
    int attempts = 0;
    std::uint32_t seq = 0;
    std::int64_t first_send_ms = 0;
    std::optional<std::int64_t> ack_ms;
    std::optional<std::int64_t> latency_ms; // ack_ms - first_send_ms
    std::int64_t end_ms = 0;                // ack arrival or give-up time
};

// Runs one alert to completion starting at host time start_ms. Throws
// NotAnAlert when the payload's label is outside policy.alert_labels.
DeliveryRecord send_alert(DeviceSession& device, HostGateway& host, const DataPayload& payload, RadioLink& uplink,
                          RadioLink& downlink, const AlertPolicy& policy, std::int64_t start_ms);

} // namespace openhealth
