#pragma once

// Two-timestamp clock offset estimation between a device and the host.
//
//   device sends request at device time t1
//   host receives at host time t2, replies at host time t3
//   device receives the reply at device time t4
//
//   offset = ((t2 - t1) + (t3 - t4)) / 2      host clock minus device clock
//
// With uplink latency u and downlink latency d the estimate is off by
// (u - d) / 2, so it is exact under symmetric latency.

#include <cstdint>

#include "openhealth/channel.hpp"
#include "openhealth/host.hpp"
#include "openhealth/session.hpp"

namespace openhealth {

double estimate_offset(std::int64_t t1, std::int64_t t2, std::int64_t t3, std::int64_t t4);

// Round trip excluding host turnaround.
std::int64_t round_trip_ms(std::int64_t t1, std::int64_t t2, std::int64_t t3, std::int64_t t4);

struct SyncState {
    double offset_ms = 0.0; // host minus device
    std::int64_t rtt_ms = 0;
    std::int64_t interval_ms = 6 * 3'600'000;
    std::int64_t last_sync_host_ms = -1;
    bool synced = false;
};

struct SyncPolicy {
    int max_retries = 3;               // after the first attempt
    std::int64_t reply_timeout_ms = 1000;
};

struct SyncOutcome {
    bool completed = false;
    bool report_delivered = false;
    int attempts = 0;
    std::int64_t t1 = 0, t2 = 0, t3 = 0, t4 = 0; // of the completing attempt
    std::int64_t end_host_ms = 0;
    SyncState state;
};

// One exchange through real frames and channels, starting at host time
// start_host_ms. The device clock reads host time minus host_minus_device_ms.
// On success the device reports the estimate back so the host can correct
// timestamps; a failed exchange leaves `previous` untouched.
SyncOutcome sync_exchange(DeviceSession& device, HostGateway& host, RadioLink& uplink, RadioLink& downlink,
                          const SyncState& previous, std::int64_t start_host_ms, std::int64_t host_minus_device_ms,
                          const SyncPolicy& policy = {});

} // namespace openhealth
