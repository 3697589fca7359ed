#include "openhealth/trace.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "openhealth/energy.hpp"

namespace openhealth {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

bool parse_i64(std::string_view s, std::int64_t& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool parse_f64(std::string_view s, double& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

std::vector<std::uint8_t> from_hex(std::string_view hex, std::size_t line) {
    if (hex.size() % 2)
        throw TraceFormatError(line, "odd-length hex");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned v = 0;
        const auto r = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
        if (r.ec != std::errc() || r.ptr != hex.data() + 2 * i + 2)
            throw TraceFormatError(line, "bad hex digit");
        out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

template <class T>
void append_bytes(std::vector<std::vector<std::uint8_t>>& out, T value) {
    const auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
    std::vector<std::uint8_t> be(sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        be[i] = static_cast<std::uint8_t>(bits >> (8 * (sizeof(T) - 1 - i)));
    std::vector<std::uint8_t> le(be.rbegin(), be.rend());
    out.push_back(std::move(be));
    out.push_back(std::move(le));
}

std::optional<std::uint16_t> device_of(std::string_view entity) {
    if (!entity.starts_with("dev:"))
        return std::nullopt;
    std::int64_t id = 0;
    if (!parse_i64(entity.substr(4), id) || id < 0 || id > 0xffff)
        return std::nullopt;
    return static_cast<std::uint16_t>(id);
}

std::optional<Vec3> canary_of(const ParsedTrace& t) {
    const auto it = t.header.find("canary");
    if (it == t.header.end())
        return std::nullopt;
    const auto parts = split(it->second, ',');
    if (parts.size() != 3)
        return std::nullopt;
    Vec3 v{};
    for (std::size_t i = 0; i < 3; ++i)
        if (!parse_f64(parts[i], v[i]))
            return std::nullopt;
    return v;
}

struct TxInfo {
    std::uint16_t dev = 0;
    bool uplink = true;
    std::string type;
};

} // namespace

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("trace line {}: {}", line, what)), line_(line) {}

const std::string& TraceLine::at(std::string_view key) const {
    const auto it = fields.find(key);
    if (it == fields.end())
        throw TraceFormatError(line_no, fmt::format("'{}' event lacks field '{}'", kind, key));
    return it->second;
}

std::optional<std::string_view> TraceLine::get(std::string_view key) const {
    const auto it = fields.find(key);
    if (it == fields.end())
        return std::nullopt;
    return std::string_view(it->second);
}

double TraceLine::number(std::string_view key) const {
    double v = 0;
    if (!parse_f64(at(key), v))
        throw TraceFormatError(line_no, fmt::format("field '{}' is not a number", key));
    return v;
}

std::int64_t TraceLine::integer(std::string_view key) const {
    std::int64_t v = 0;
    if (!parse_i64(at(key), v))
        throw TraceFormatError(line_no, fmt::format("field '{}' is not an integer", key));
    return v;
}

ParsedTrace parse_trace(std::string_view text) {
    ParsedTrace out;
    std::size_t line_no = 0;
    bool first = true;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r')
            raw.remove_suffix(1);
        if (is_blank(raw))
            continue;
        if (raw.front() == '#') {
            const auto parts = split(raw.substr(1), '\t');
            const std::string key(parts[0]);
            const std::string value = parts.size() > 1 ? std::string(parts[1]) : std::string();
            if (first && raw.starts_with(kTraceMagic))
                out.version = value;
            else
                out.header[key] = value;
            first = false;
            continue;
        }
        first = false;
        const auto parts = split(raw, '\t');
        if (parts.size() < 3)
            throw TraceFormatError(line_no, "expected time, kind and entity");
        TraceLine l;
        l.line_no = line_no;
        if (!parse_i64(parts[0], l.t_ms))
            throw TraceFormatError(line_no, "time is not an integer");
        l.kind = std::string(parts[1]);
        l.entity = std::string(parts[2]);
        for (std::size_t i = 3; i < parts.size(); ++i) {
            const auto eq = parts[i].find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw TraceFormatError(line_no, fmt::format("field '{}' is not key=value", parts[i]));
            l.fields.emplace(std::string(parts[i].substr(0, eq)), std::string(parts[i].substr(eq + 1)));
        }
        out.events.push_back(std::move(l));
    }
    return out;
}

std::vector<std::vector<std::uint8_t>> canary_patterns(const Vec3& accel) {
    std::vector<std::vector<std::uint8_t>> out;
    for (double v : accel) {
        append_bytes(out, v);
        append_bytes(out, static_cast<float>(v));
    }
    std::vector<std::uint8_t> be, le;
    for (double v : accel) {
        const double scaled = std::clamp(v / kAccelFullScaleG, -1.0, 1.0) * 32767.0;
        const auto raw = static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(scaled)));
        be.push_back(static_cast<std::uint8_t>(raw >> 8));
        be.push_back(static_cast<std::uint8_t>(raw & 0xff));
        le.push_back(static_cast<std::uint8_t>(raw & 0xff));
        le.push_back(static_cast<std::uint8_t>(raw >> 8));
    }
    out.push_back(std::move(be));
    out.push_back(std::move(le));
    return out;
}

std::size_t count_pattern_hits(std::span<const std::uint8_t> haystack,
                               const std::vector<std::vector<std::uint8_t>>& patterns) {
    std::size_t hits = 0;
    for (const auto& p : patterns) {
        if (p.empty() || p.size() > haystack.size())
            continue;
        auto it = haystack.begin();
        while ((it = std::search(it, haystack.end(), p.begin(), p.end())) != haystack.end()) {
            ++hits;
            ++it;
        }
    }
    return hits;
}

nlohmann::json compute_metrics(std::string_view text) {
    using nlohmann::json;
    const auto trace = parse_trace(text);

    struct Dev {
        std::string app;
        std::int64_t frames_sent = 0, frames_lost = 0, frames_received = 0, frames_rejected = 0;
        std::map<std::string, std::int64_t> sent_by_type, rejected_by_status;
        std::int64_t downlink_sent = 0, downlink_lost = 0, downlink_received = 0, downlink_rejected = 0;
        std::int64_t inferences = 0, correct = 0, labeled = 0;
        std::map<std::string, std::int64_t> outputs;
        std::int64_t alerts_raised = 0, alerts_delivered = 0, alerts_undelivered = 0, notifications = 0;
        std::int64_t max_alert_latency = 0;
        std::int64_t syncs = 0, sync_timeouts = 0;
        double last_offset = 0;
        double battery_start = 0, battery_end = 0, capacity = 0;
        std::vector<double> daily, hourly;
        double harvested = 0, consumed = 0, spilled = 0, deficit = 0;
        std::int64_t depletions = 0;
    };
    std::map<std::uint16_t, Dev> devs;
    std::map<std::string, TxInfo> tx;
    std::int64_t duration = 0;

    for (const auto& l : trace.events) {
        const auto id = device_of(l.entity);
        if (l.kind == "boot" && id) {
            auto& d = devs[*id];
            d.app = l.at("app");
            d.battery_start = d.battery_end = l.number("battery");
            d.capacity = l.number("capacity");
        } else if (l.kind == "send" || l.kind == "resend") {
            const bool up = l.at("dir") == "up";
            const auto dev = static_cast<std::uint16_t>(l.integer("dev"));
            tx[l.at("tx")] = {dev, up, l.at("type")};
            auto& d = devs[dev];
            if (up) {
                ++d.frames_sent;
                ++d.sent_by_type[l.at("type")];
            } else {
                ++d.downlink_sent;
            }
        } else if (l.kind == "drop") {
            const auto it = tx.find(l.at("tx"));
            if (it == tx.end())
                continue;
            auto& d = devs[it->second.dev];
            ++(it->second.uplink ? d.frames_lost : d.downlink_lost);
        } else if (l.kind == "recv") {
            const auto it = tx.find(l.at("tx"));
            if (it == tx.end())
                continue;
            auto& d = devs[it->second.dev];
            const auto& status = l.at("status");
            if (status == "Ok") {
                ++d.frames_received;
            } else {
                ++d.frames_rejected;
                ++d.rejected_by_status[status];
            }
        } else if (l.kind == "devrecv" && id) {
            auto& d = devs[*id];
            ++(l.at("status") == "Ok" ? d.downlink_received : d.downlink_rejected);
        } else if (l.kind == "infer" && id) {
            auto& d = devs[*id];
            ++d.inferences;
            ++d.outputs[l.at("label")];
            if (l.at("truth") != "none") {
                ++d.labeled;
                d.correct += l.at("label") == l.at("truth") ? 1 : 0;
            }
        } else if (l.kind == "alert" && id) {
            ++devs[*id].alerts_raised;
        } else if (l.kind == "alert-delivered" && id) {
            auto& d = devs[*id];
            ++d.alerts_delivered;
            d.max_alert_latency = std::max(d.max_alert_latency, l.integer("latency"));
        } else if (l.kind == "alert-undelivered" && id) {
            ++devs[*id].alerts_undelivered;
        } else if (l.kind == "notify") {
            ++devs[static_cast<std::uint16_t>(l.integer("dev"))].notifications;
        } else if (l.kind == "sync" && id) {
            ++devs[*id].syncs;
            devs[*id].last_offset = l.number("offset");
        } else if (l.kind == "sync-timeout" && id) {
            ++devs[*id].sync_timeouts;
        } else if (l.kind == "energy" && id) {
            auto& d = devs[*id];
            d.harvested += l.number("harvested");
            d.consumed += l.number("consumed");
            d.spilled += l.number("spilled");
            d.deficit += l.number("deficit");
            d.battery_end = l.number("after");
            d.hourly.push_back(d.battery_end);
        } else if (l.kind == "day" && id) {
            devs[*id].daily.push_back(l.number("battery"));
        } else if (l.kind == "depleted" && id) {
            ++devs[*id].depletions;
        } else if (l.kind == "end") {
            duration = l.integer("duration");
        }
    }

    json out;
    out["duration_ms"] = duration;
    if (const auto it = trace.header.find("seed"); it != trace.header.end())
        try {
            out["seed"] = static_cast<std::uint64_t>(std::stoull(it->second));
        } catch (const std::exception&) {
            out["seed"] = it->second;
        }
    json devices = json::object();
    json totals = {{"frames_sent", 0},     {"frames_lost", 0},      {"frames_received", 0},
                   {"frames_rejected", 0}, {"inferences", 0},       {"alerts_raised", 0},
                   {"alerts_delivered", 0}, {"alerts_undelivered", 0}, {"syncs", 0},
                   {"sync_timeouts", 0},   {"depletions", 0}};
    for (const auto& [id, d] : devs) {
        json j;
        j["app"] = d.app;
        j["frames_sent"] = d.frames_sent;
        j["frames_lost"] = d.frames_lost;
        j["frames_received"] = d.frames_received;
        j["frames_rejected"] = d.frames_rejected;
        j["sent_by_type"] = d.sent_by_type;
        j["rejected_by_status"] = d.rejected_by_status;
        j["downlink"] = {{"sent", d.downlink_sent},
                         {"lost", d.downlink_lost},
                         {"received", d.downlink_received},
                         {"rejected", d.downlink_rejected}};
        j["inferences"] = d.inferences;
        j["labeled_inferences"] = d.labeled;
        j["accuracy_pct"] = d.labeled ? 100.0 * static_cast<double>(d.correct) / static_cast<double>(d.labeled) : 0.0;
        j["classifier_outputs"] = d.outputs;
        j["alerts_raised"] = d.alerts_raised;
        j["alerts_delivered"] = d.alerts_delivered;
        j["alerts_undelivered"] = d.alerts_undelivered;
        j["max_alert_latency_ms"] = d.max_alert_latency;
        j["notifications"] = d.notifications;
        j["syncs"] = d.syncs;
        j["sync_timeouts"] = d.sync_timeouts;
        j["last_offset_ms"] = d.last_offset;
        j["battery_start_mwh"] = d.battery_start;
        j["battery_end_mwh"] = d.battery_end;
        j["capacity_mwh"] = d.capacity;
        j["battery_daily_mwh"] = d.daily;
        j["battery_hourly_mwh"] = d.hourly;
        j["harvested_mwh"] = d.harvested;
        j["consumed_mwh"] = d.consumed;
        j["spilled_mwh"] = d.spilled;
        j["deficit_mwh"] = d.deficit;
        j["depletions"] = d.depletions;
        for (auto& [k, v] : totals.items())
            v = v.get<std::int64_t>() + j[k].get<std::int64_t>();
        devices[std::to_string(id)] = std::move(j);
    }
    out["devices"] = std::move(devices);
    out["totals"] = std::move(totals);
    return out;
}

ReplayReport replay(std::string_view text, const ReplayOptions& options) {
    ReplayReport rep;
    if (is_blank(text)) {
        rep.warnings.push_back("empty trace: nothing to check");
        for (const char* c : {"energy", "sequence", "canary", "completeness"})
            rep.checks[c] = true;
        return rep;
    }

    auto fail = [&](const std::string& check, std::size_t line, std::string msg) {
        rep.passed = false;
        rep.checks[check] = false;
        rep.failures.push_back({check, line, std::move(msg)});
    };

    ParsedTrace trace;
    try {
        trace = parse_trace(text);
    } catch (const TraceFormatError& e) {
        fail("format", e.line(), e.what());
        return rep;
    }
    if (!trace.version)
        throw TraceVersionError(fmt::format("not a trace file: first line must be '{}\\t{}'", kTraceMagic,
                                            kTraceVersion));
    if (*trace.version != kTraceVersion)
        throw TraceVersionError(
            fmt::format("unsupported trace version '{}' (supported: {})", *trace.version, kTraceVersion));
    if (trace.events.empty())
        rep.warnings.push_back("trace has a header but no events");

    const auto guarded = [&](const std::string& check, auto&& body) {
        rep.checks.emplace(check, true);
        try {
            body();
        } catch (const TraceFormatError& e) {
            fail(check, e.line(), e.what());
        }
    };

    if (options.energy)
        guarded("energy", [&] {
            struct Params {
                double p_sleep, p_active, p_tx, mppt, charge, discharge, capacity, level;
                bool seen_energy = false;
            };
            std::map<std::uint16_t, Params> devs;
            constexpr double tol = 1e-6;
            for (const auto& l : trace.events) {
                const auto id = device_of(l.entity);
                if (!id)
                    continue;
                if (l.kind == "boot") {
                    devs[*id] = {l.number("p_sleep"), l.number("p_active"),  l.number("p_tx"),
                                 l.number("mppt"),    l.number("charge"),    l.number("discharge"),
                                 l.number("capacity"), l.number("battery")};
                    continue;
                }
                if (l.kind != "energy")
                    continue;
                const auto it = devs.find(*id);
                if (it == devs.end()) {
                    fail("energy", l.line_no, "energy line before the device's boot line");
                    continue;
                }
                auto& p = it->second;
                const auto dt = l.integer("dt");
                const auto dwell = split(l.at("dwell"), ',');
                std::array<std::int64_t, 4> ms{};
                if (dwell.size() != 4 || dt <= 0) {
                    fail("energy", l.line_no, "dwell must list four state times and dt must be positive");
                    continue;
                }
                for (std::size_t s = 0; s < 4; ++s)
                    if (!parse_i64(dwell[s], ms[s]) || ms[s] < 0)
                        throw TraceFormatError(l.line_no, "bad dwell entry");
                if (ms[0] + ms[1] + ms[2] + ms[3] != dt)
                    fail("energy", l.line_no, fmt::format("dwell sums to {} ms, interval is {} ms",
                                                          ms[0] + ms[1] + ms[2] + ms[3], dt));
                const double hour = static_cast<double>(kMsPerHour);
                const double consumed = (static_cast<double>(ms[0]) * p.p_sleep +
                                         static_cast<double>(ms[1] + ms[2]) * p.p_active +
                                         static_cast<double>(ms[3]) * p.p_tx) /
                                        hour;
                const double harvested = p.mppt * l.number("harvest_mw") * static_cast<double>(dt) / hour;
                const double net = harvested - consumed;
                const double applied = net >= 0 ? net * p.charge : net / p.discharge;
                const double before = l.number("before"), after = l.number("after");
                const double spilled = l.number("spilled"), deficit = l.number("deficit");
                const auto check = [&](const char* name, double got, double want) {
                    if (std::abs(got - want) > tol)
                        fail("energy", l.line_no, fmt::format("{} is {:.9f}, recomputed {:.9f}", name, got, want));
                };
                check("consumed", l.number("consumed"), consumed);
                check("harvested", l.number("harvested"), harvested);
                check("applied", l.number("applied"), applied);
                check("before", before, p.level);
                check("balance (before + applied - spilled + deficit)", before + applied - spilled + deficit,
                      after);
                if (after < -tol || after > p.capacity + tol)
                    fail("energy", l.line_no,
                         fmt::format("battery {:.9f} outside [0, {:.9f}]", after, p.capacity));
                if (spilled < 0 || deficit < 0)
                    fail("energy", l.line_no, "spilled and deficit must be nonnegative");
                p.level = after;
            }
        });

    if (options.sequence)
        guarded("sequence", [&] {
            std::map<std::pair<std::uint16_t, bool>, std::int64_t> last;
            std::map<std::pair<std::uint16_t, std::int64_t>, std::pair<std::size_t, std::string>> nonces;
            for (const auto& l : trace.events) {
                if (l.kind != "send" && l.kind != "resend")
                    continue;
                const bool up = l.at("dir") == "up";
                const auto dev = static_cast<std::uint16_t>(l.integer("dev"));
                const auto seq = l.integer("seq");
                const bool high = (static_cast<std::uint64_t>(seq) & 0x8000'0000ull) != 0;
                if (high == up)
                    fail("sequence", l.line_no,
                         fmt::format("seq {} is outside the {} sequence range", seq, up ? "uplink" : "downlink"));
                if (l.kind == "resend") {
                    const auto it = nonces.find({dev, seq});
                    if (it == nonces.end())
                        fail("sequence", l.line_no, fmt::format("resend of seq {} that was never sent", seq));
                    else if (it->second.second != l.at("bytes"))
                        fail("sequence", l.line_no,
                             fmt::format("resend of seq {} differs from the original on line {}", seq,
                                         it->second.first));
                    continue;
                }
                auto& prev = last.try_emplace({dev, up}, -1).first->second;
                if (seq <= prev)
                    fail("sequence", l.line_no,
                         fmt::format("device {} {} seq {} not above previous {}", dev, up ? "uplink" : "downlink",
                                     seq, prev));
                prev = seq;
                const auto [it, fresh] = nonces.try_emplace({dev, seq}, l.line_no, l.at("bytes"));
                if (!fresh)
                    fail("sequence", l.line_no,
                         fmt::format("nonce (device {}, seq {}) reused; first used on line {}", dev, seq,
                                     it->second.first));
            }
        });

    if (options.canary)
        guarded("canary", [&] {
            const auto canary = canary_of(trace);
            if (!canary) {
                rep.warnings.push_back("no canary recorded; raw-sample leak check skipped");
                return;
            }
            const auto patterns = canary_patterns(*canary);
            for (const auto& l : trace.events) {
                if (l.kind != "send" && l.kind != "resend")
                    continue;
                const auto bytes = from_hex(l.at("bytes"), l.line_no);
                if (const auto hits = count_pattern_hits(bytes, patterns))
                    fail("canary", l.line_no, fmt::format("{} canary pattern(s) found in transmitted bytes", hits));
            }
        });

    if (options.completeness)
        guarded("completeness", [&] {
            std::map<std::string, std::size_t> sent, resolved;
            for (const auto& l : trace.events) {
                if (l.kind == "send" || l.kind == "resend") {
                    const auto [it, fresh] = sent.try_emplace(l.at("tx"), l.line_no);
                    if (!fresh)
                        fail("completeness", l.line_no,
                             fmt::format("transmission {} already started on line {}", l.at("tx"), it->second));
                } else if (l.kind == "recv" || l.kind == "devrecv" || l.kind == "drop") {
                    const auto& id = l.at("tx");
                    if (!sent.contains(id)) {
                        fail("completeness", l.line_no, fmt::format("outcome for unknown transmission {}", id));
                        continue;
                    }
                    const auto [it, fresh] = resolved.try_emplace(id, l.line_no);
                    if (!fresh)
                        fail("completeness", l.line_no,
                             fmt::format("transmission {} already resolved on line {}", id, it->second));
                }
            }
            const auto in_flight = sent.size() - resolved.size();
            if (in_flight)
                rep.warnings.push_back(fmt::format("{} transmission(s) still in flight at end of trace", in_flight));
        });

    return rep;
}

std::string device_log_csv(std::string_view text) {
    const auto trace = parse_trace(text);
    struct Dev {
        std::string state = "Sleep";
        double battery = 0;
    };
    std::map<std::uint16_t, Dev> devs;
    std::string out = "t_ms,event,device_id,state,battery_mwh\n";
    for (const auto& l : trace.events) {
        const auto id = device_of(l.entity);
        if (!id)
            continue;
        auto& d = devs[*id];
        std::string event;
        if (l.kind == "boot") {
            d.battery = l.number("battery");
            event = "boot";
        } else if (l.kind == "state") {
            d.state = l.at("to");
            event = l.at("event");
        } else if (l.kind == "energy") {
            d.battery = l.number("after");
            event = "energy";
        } else if (l.kind == "depleted" || l.kind == "recovered") {
            d.battery = l.number("battery");
            event = l.kind;
        } else if (l.kind == "infer" || l.kind == "alert" || l.kind == "alert-delivered" ||
                   l.kind == "alert-undelivered" || l.kind == "sync" || l.kind == "sync-timeout") {
            event = l.kind;
        } else {
            continue;
        }
        out += fmt::format("{},{},{},{},{:.6f}\n", l.t_ms, event, *id, d.state, d.battery);
    }
    return out;
}

} // namespace openhealth
