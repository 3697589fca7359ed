#include "openhealth/alert.hpp"

#include <algorithm>
#include <queue>
#include <string>

namespace openhealth {

void validate_alert_policy(const AlertPolicy& p) {
    if (p.retry_interval_ms <= 0)
        throw std::invalid_argument("alert retry interval must be > 0");
    if (p.max_attempts < 1)
        throw std::invalid_argument("alert max_attempts must be >= 1");
}

bool is_alert_label(const AlertPolicy& p, Label label) {
    return std::find(p.alert_labels.begin(), p.alert_labels.end(), label) != p.alert_labels.end();
}

namespace {

enum class Kind { Timer, TimerFire, HostRx, DeviceRx };

struct Pending {
    std::int64_t t;
    std::uint64_t order;
    Kind kind;
    int attempt = 0;
    std::vector<std::uint8_t> bytes;
};

struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
        return a.t != b.t ? a.t > b.t : a.order > b.order;
    }
};

} // namespace

DeliveryRecord send_alert(DeviceSession& device, HostGateway& host, const DataPayload& payload, RadioLink& uplink,
                          RadioLink& downlink, const AlertPolicy& policy, std::int64_t start_ms) {
    validate_alert_policy(policy);
    const Label label = label_decode(payload.app, payload.label_index);
    if (!is_alert_label(policy, label))
        throw NotAnAlert("label " + std::string(label_name(label)) + " is not in the alert set");

    const auto frame = device.seal(FrameType::Alert, encode_data_payload(payload));
    DeliveryRecord rec;
    rec.seq = frame.seq;
    rec.first_send_ms = start_ms;

    std::priority_queue<Pending, std::vector<Pending>, Later> queue;
    std::uint64_t order = 0;
    queue.push({start_ms, order++, Kind::Timer, 0, {}});

    while (!queue.empty()) {
        auto ev = queue.top();
        queue.pop();
        switch (ev.kind) {
        case Kind::Timer:
            // Re-queue at the same instant: any delivery already scheduled
            // for this millisecond was pushed earlier and now runs first.
            queue.push({ev.t, order++, Kind::TimerFire, ev.attempt, {}});
            break;
        case Kind::TimerFire: {
            if (rec.ack_ms)
                break;
            if (ev.attempt == policy.max_attempts) {
                rec.end_ms = ev.t;
                return rec;
            }
            ++rec.attempts;
            auto tx = uplink.transmit(frame.bytes);
            if (!tx.lost)
                queue.push({ev.t + tx.latency_ms, order++, Kind::HostRx, 0, std::move(tx.bytes)});
            queue.push({ev.t + policy.retry_interval_ms, order++, Kind::Timer, ev.attempt + 1, {}});
            break;
        }
        case Kind::HostRx: {
            auto r = host.receive(ev.bytes, ev.t);
            for (const auto& reply : r.replies) {
                auto tx = downlink.transmit(reply.bytes);
                if (!tx.lost)
                    queue.push({ev.t + tx.latency_ms, order++, Kind::DeviceRx, 0, std::move(tx.bytes)});
            }
            break;
        }
        case Kind::DeviceRx: {
            if (rec.ack_ms)
                break;
            const auto opened = device.open(ev.bytes);
            if (!opened.ok() || opened.frame.type != FrameType::Ack)
                break;
            try {
                const auto ack = decode_ack_payload(opened.frame.payload);
                if (ack.acked_type == FrameType::Alert && ack.acked_seq == rec.seq) {
                    rec.delivered = true;
                    rec.ack_ms = ev.t;
                    rec.latency_ms = ev.t - start_ms;
                    rec.end_ms = ev.t;
                    return rec;
                }
            } catch (const PayloadError&) {
            }
            break;
        }
        }
    }
    return rec;
}

} // namespace openhealth
