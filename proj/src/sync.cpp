#include "openhealth/sync.hpp"

#include <cmath>
#include <stdexcept>

namespace openhealth {

double estimate_offset(std::int64_t t1, std::int64_t t2, std::int64_t t3, std::int64_t t4) {
    return static_cast<double>((t2 - t1) + (t3 - t4)) / 2.0;
}

std::int64_t round_trip_ms(std::int64_t t1, std::int64_t t2, std::int64_t t3, std::int64_t t4) {
    return (t4 - t1) - (t3 - t2);
}

SyncOutcome sync_exchange(DeviceSession& device, HostGateway& host, RadioLink& uplink, RadioLink& downlink,
                          const SyncState& previous, std::int64_t start_host_ms, std::int64_t host_minus_device_ms,
                          const SyncPolicy& policy) {
    if (policy.max_retries < 0 || policy.reply_timeout_ms <= 0)
        throw std::invalid_argument("invalid sync policy");
    SyncOutcome out;
    out.state = previous;
    std::int64_t attempt_start = start_host_ms;

    for (int attempt = 0; attempt <= policy.max_retries; ++attempt, attempt_start += policy.reply_timeout_ms) {
        out.attempts = attempt + 1;
        out.end_host_ms = attempt_start + policy.reply_timeout_ms;
        const std::int64_t t1 = attempt_start - host_minus_device_ms;
        const auto request = device.seal(FrameType::TimeSync, encode_sync_payload({SyncKind::Request, t1, 0, 0}));

        const auto up = uplink.transmit(request.bytes);
        if (up.lost)
            continue;
        const std::int64_t host_rx = attempt_start + up.latency_ms;
        auto handled = host.receive(up.bytes, host_rx);
        if (handled.status != DecodeStatus::Ok || handled.replies.empty())
            continue;

        const auto down = downlink.transmit(handled.replies.front().bytes);
        if (down.lost)
            continue;
        const std::int64_t device_rx_host = host_rx + down.latency_ms;
        if (device_rx_host > attempt_start + policy.reply_timeout_ms)
            continue; // too late; the device has already given up on this request
        const auto reply = device.open(down.bytes);
        if (!reply.ok() || reply.frame.type != FrameType::TimeSync)
            continue;
        TimeSyncPayload p;
        try {
            p = decode_sync_payload(reply.frame.payload);
        } catch (const PayloadError&) {
            continue;
        }
        if (p.kind != SyncKind::Response || p.a != t1)
            continue;

        out.completed = true;
        out.t1 = t1;
        out.t2 = p.b;
        out.t3 = p.c;
        out.t4 = device_rx_host - host_minus_device_ms;
        out.end_host_ms = device_rx_host;
        out.state.offset_ms = estimate_offset(out.t1, out.t2, out.t3, out.t4);
        out.state.rtt_ms = round_trip_ms(out.t1, out.t2, out.t3, out.t4);
        out.state.last_sync_host_ms = device_rx_host;
        out.state.synced = true;

        const auto report =
            device.seal(FrameType::TimeSync, encode_sync_payload({SyncKind::Report,
                                                                  std::llround(out.state.offset_ms * 1000.0),
                                                                  out.state.rtt_ms, 0}));
        const auto rep = uplink.transmit(report.bytes);
        if (!rep.lost) {
            const auto r = host.receive(rep.bytes, device_rx_host + rep.latency_ms);
            out.report_delivered = r.status == DecodeStatus::Ok;
        }
        return out;
    }
    return out;
}

} // namespace openhealth
