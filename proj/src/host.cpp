#include "openhealth/host.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "openhealth/session.hpp"

namespace openhealth {

void HostGateway::register_device(std::uint16_t device_id, const Key& key) {
    if (devices_.contains(device_id))
        throw std::invalid_argument(fmt::format("device {} already registered", device_id));
    DeviceState d;
    d.key = key;
    d.window = ReplayWindow(replay_width_);
    devices_.emplace(device_id, std::move(d));
}

const std::vector<Observation>& HostGateway::observations(std::uint16_t device_id) const {
    static const std::vector<Observation> empty;
    const auto it = devices_.find(device_id);
    return it == devices_.end() ? empty : it->second.log;
}

std::optional<HostSyncRecord> HostGateway::sync_record(std::uint16_t device_id) const {
    const auto it = devices_.find(device_id);
    return it == devices_.end() ? std::nullopt : it->second.sync;
}

std::optional<AppKind> HostGateway::app_of_device(std::uint16_t device_id) const {
    const auto it = devices_.find(device_id);
    return it == devices_.end() ? std::nullopt : it->second.app;
}

SealedFrame HostGateway::seal_downlink(std::uint16_t device_id, FrameType type, std::span<const std::uint8_t> payload) {
    auto& d = devices_.at(device_id);
    SealedFrame f;
    f.seq = d.downlink.next();
    f.bytes = encode_frame(type, device_id, f.seq, payload, d.key);
    return f;
}

std::int64_t HostGateway::correct(const DeviceState& d, std::int64_t device_t_ms) const {
    const double offset = d.sync ? d.sync->offset_ms : 0.0;
    return device_t_ms + std::llround(offset);
}

HostResult HostGateway::receive(std::span<const std::uint8_t> bytes, std::int64_t now_ms) {
    HostResult r;
    const auto header = peek_header(bytes);
    if (!header) {
        r.status = DecodeStatus::Truncated;
        return r;
    }
    const auto it = devices_.find(header->device_id);
    if (it == devices_.end()) {
        r.status = DecodeStatus::UnknownDevice;
        r.frame = Frame{static_cast<FrameType>(header->type), header->device_id, header->seq, {}};
        return r;
    }
    auto& dev = it->second;
    const std::uint16_t id = header->device_id;

    auto out = decode_frame(bytes, dev.key, dev.window);
    r.status = out.status;
    r.frame = out.frame;

    // An authenticated retransmission of an alert already accepted: the
    // first ACK was lost, so acknowledge again but do not notify twice.
    if (out.status == DecodeStatus::ReplayRejected && out.frame.type == FrameType::Alert &&
        dev.accepted_alerts.contains(out.frame.seq)) {
        r.replies.push_back(
            seal_downlink(id, FrameType::Ack, encode_ack_payload({FrameType::Alert, out.frame.seq})));
        return r;
    }
    if (!out.ok())
        return r;

    try {
        switch (out.frame.type) {
        case FrameType::Hello: {
            if (out.frame.payload.size() != 1 || (out.frame.payload[0] != 1 && out.frame.payload[0] != 2))
                throw PayloadError("hello payload must be a single app id");
            dev.app = static_cast<AppKind>(out.frame.payload[0]);
            r.replies.push_back(
                seal_downlink(id, FrameType::Ack, encode_ack_payload({FrameType::Hello, out.frame.seq})));
            break;
        }
        case FrameType::TimeSync: {
            const auto p = decode_sync_payload(out.frame.payload);
            if (p.kind == SyncKind::Request) {
                const TimeSyncPayload resp{SyncKind::Response, p.a, now_ms, now_ms};
                r.replies.push_back(seal_downlink(id, FrameType::TimeSync, encode_sync_payload(resp)));
            } else if (p.kind == SyncKind::Report) {
                dev.sync = HostSyncRecord{static_cast<double>(p.a) / 1000.0, p.b, now_ms};
            } else {
                throw PayloadError("host does not accept time-sync responses");
            }
            break;
        }
        case FrameType::Data:
        case FrameType::Alert: {
            const auto p = decode_data_payload(out.frame.payload);
            Observation obs{id, out.frame.seq, p.timestamp_ms, correct(dev, p.timestamp_ms), p.app,
                            p.label_index, p.confidence, out.frame.type == FrameType::Alert};
            auto pos = std::upper_bound(dev.log.begin(), dev.log.end(), obs.corrected_t_ms,
                                        [](std::int64_t t, const Observation& o) { return t < o.corrected_t_ms; });
            dev.log.insert(pos, obs);
            r.stored = obs;
            if (obs.alert) {
                dev.accepted_alerts.insert(out.frame.seq);
                Notification n{id, out.frame.seq, now_ms, obs.corrected_t_ms, p.app, p.label_index};
                notifications_.push_back(n);
                r.notified = n;
                r.replies.push_back(
                    seal_downlink(id, FrameType::Ack, encode_ack_payload({FrameType::Alert, out.frame.seq})));
            }
            break;
        }
        case FrameType::Ack:
        case FrameType::Config:
            break;
        }
    } catch (const PayloadError&) {
        r.status = DecodeStatus::MalformedPayload;
        r.replies.clear();
        r.stored.reset();
        r.notified.reset();
    }
    return r;
}

std::string HostGateway::observations_csv() const {
    std::string out = std::string(kObservationCsvHeader) + "\n";
    for (const auto& [id, dev] : devices_)
        for (const auto& o : dev.log)
            out += fmt::format("{},{},{},{},{:.4f}\n", o.device_id, o.corrected_t_ms, static_cast<int>(o.app),
                               label_name(label_decode(o.app, o.label_index)),
                               static_cast<double>(o.confidence) / kConfidenceScale);
    return out;
}

} // namespace openhealth
