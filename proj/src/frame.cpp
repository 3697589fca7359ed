#include "openhealth/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "openhealth/wire.hpp"

namespace openhealth {

std::string_view frame_type_name(FrameType t) {
    switch (t) {
    case FrameType::Hello: return "HELLO";
    case FrameType::TimeSync: return "TIME_SYNC";
    case FrameType::Data: return "DATA";
    case FrameType::Alert: return "ALERT";
    case FrameType::Ack: return "ACK";
    case FrameType::Config: return "CONFIG";
    }
    return "?";
}

bool is_known_frame_type(std::uint8_t v) { return v >= 1 && v <= 6; }

std::string_view decode_status_name(DecodeStatus s) {
    switch (s) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::Truncated: return "Truncated";
    case DecodeStatus::AuthFailure: return "AuthFailure";
    case DecodeStatus::UnknownVersion: return "UnknownVersion";
    case DecodeStatus::LengthMismatch: return "LengthMismatch";
    case DecodeStatus::UnknownType: return "UnknownType";
    case DecodeStatus::ReplayRejected: return "ReplayRejected";
    case DecodeStatus::UnknownDevice: return "UnknownDevice";
    case DecodeStatus::MalformedPayload: return "MalformedPayload";
    }
    return "?";
}

Nonce frame_nonce(std::uint16_t device_id, std::uint32_t seq) {
    Nonce n{};
    n[0] = static_cast<std::uint8_t>(device_id >> 8);
    n[1] = static_cast<std::uint8_t>(device_id);
    n[2] = static_cast<std::uint8_t>(seq >> 24);
    n[3] = static_cast<std::uint8_t>(seq >> 16);
    n[4] = static_cast<std::uint8_t>(seq >> 8);
    n[5] = static_cast<std::uint8_t>(seq);
    return n;
}

std::vector<std::uint8_t> encode_frame_with_version(std::uint8_t version, FrameType type, std::uint16_t device_id,
                                                    std::uint32_t seq, std::span<const std::uint8_t> payload,
                                                    const Key& key) {
    if (payload.size() > kMaxPayloadBytes)
        throw PayloadTooLong("payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                             std::to_string(kMaxPayloadBytes));
    ByteWriter w;
    w.u8(version);
    w.u8(static_cast<std::uint8_t>(type));
    w.u16(device_id);
    w.u32(seq);
    w.u16(static_cast<std::uint16_t>(payload.size()));
    auto out = w.take();
    const auto sealed = aead_seal(key, frame_nonce(device_id, seq), out, payload);
    out.insert(out.end(), sealed.begin(), sealed.end());
    return out;
}

std::vector<std::uint8_t> encode_frame(FrameType type, std::uint16_t device_id, std::uint32_t seq,
                                       std::span<const std::uint8_t> payload, const Key& key) {
    return encode_frame_with_version(kProtocolVersion, type, device_id, seq, payload, key);
}

std::optional<FrameHeader> peek_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeaderBytes)
        return std::nullopt;
    ByteReader r(bytes);
    FrameHeader h;
    h.version = r.u8();
    h.type = r.u8();
    h.device_id = r.u16();
    h.seq = r.u32();
    h.payload_len = r.u16();
    return h;
}

DecodeOutcome open_frame(std::span<const std::uint8_t> bytes, const Key& key) {
    DecodeOutcome out;
    const auto h = peek_header(bytes);
    if (!h || bytes.size() < kFrameOverheadBytes) {
        out.status = DecodeStatus::Truncated;
        return out;
    }
    out.frame.type = static_cast<FrameType>(h->type);
    out.frame.device_id = h->device_id;
    out.frame.seq = h->seq;
    if (static_cast<std::size_t>(h->payload_len) + kFrameOverheadBytes > bytes.size()) {
        out.status = DecodeStatus::Truncated;
        return out;
    }

    auto plain = aead_open(key, frame_nonce(h->device_id, h->seq), bytes.first(kFrameHeaderBytes),
                           bytes.subspan(kFrameHeaderBytes));
    if (!plain) {
        out.status = DecodeStatus::AuthFailure;
        return out;
    }
    if (h->version != kProtocolVersion)
        out.status = DecodeStatus::UnknownVersion;
    else if (plain->size() != h->payload_len)
        out.status = DecodeStatus::LengthMismatch;
    else if (!is_known_frame_type(h->type))
        out.status = DecodeStatus::UnknownType;
    else
        out.status = DecodeStatus::Ok;
    out.frame.payload = std::move(*plain);
    return out;
}

DecodeOutcome decode_frame(std::span<const std::uint8_t> bytes, const Key& key, ReplayWindow& window) {
    auto out = open_frame(bytes, key);
    if (!out.ok())
        return out;
    if (!window.would_accept(out.frame.seq)) {
        out.status = DecodeStatus::ReplayRejected;
        return out;
    }
    window.accept(out.frame.seq);
    return out;
}

ReplayWindow::ReplayWindow(std::uint32_t width) : width_(std::min(width, kMaxWidth)) {}

bool ReplayWindow::would_accept(std::uint32_t seq) const {
    if (seq > highest_)
        return true;
    const std::uint32_t age = highest_ - seq;
    if (age == 0 || age >= width_)
        return false;
    return !((seen_ >> age) & 1u);
}

void ReplayWindow::accept(std::uint32_t seq) {
    if (seq > highest_) {
        const std::uint32_t shift = seq - highest_;
        seen_ = shift >= 64 ? 0 : seen_ << shift;
        seen_ |= 1u;
        highest_ = seq;
    } else {
        seen_ |= std::uint64_t{1} << (highest_ - seq);
    }
}

std::uint32_t SeqCounter::next() {
    const std::uint32_t limit = downlink_ ? 0xffff'ffffu : kDownlinkSeqBit - 1;
    if (next_ > limit || next_ == 0)
        throw std::overflow_error("sequence space exhausted; session must be re-keyed");
    return next_++;
}

DataPayload DataPayload::from_inference(const InferenceOutput& out) {
    DataPayload p;
    p.timestamp_ms = out.timestamp_ms;
    p.label_index = out.label_index;
    p.confidence = static_cast<std::uint16_t>(std::clamp(std::lround(out.confidence * kConfidenceScale), 0L,
                                                         static_cast<long>(kConfidenceScale)));
    p.app = out.app;
    return p;
}

std::vector<std::uint8_t> encode_data_payload(const DataPayload& p) {
    if (p.confidence > kConfidenceScale)
        throw PayloadError("confidence above 10000");
    if (p.label_index >= class_count(p.app))
        throw PayloadError("label index invalid for app");
    ByteWriter w;
    w.i64(p.timestamp_ms);
    w.u8(p.label_index);
    w.u16(p.confidence);
    w.u8(static_cast<std::uint8_t>(p.app));
    return w.take();
}

DataPayload decode_data_payload(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 12)
        throw PayloadError("data payload must be 12 bytes");
    ByteReader r(bytes);
    DataPayload p;
    p.timestamp_ms = r.i64();
    p.label_index = r.u8();
    p.confidence = r.u16();
    const auto app = r.u8();
    if (app != 1 && app != 2)
        throw PayloadError("unknown app_id");
    p.app = static_cast<AppKind>(app);
    if (p.confidence > kConfidenceScale)
        throw PayloadError("confidence above 10000");
    if (p.label_index >= class_count(p.app))
        throw PayloadError("label index invalid for app");
    return p;
}

std::vector<std::uint8_t> encode_sync_payload(const TimeSyncPayload& p) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(p.kind));
    w.i64(p.a);
    w.i64(p.b);
    w.i64(p.c);
    return w.take();
}

TimeSyncPayload decode_sync_payload(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 25)
        throw PayloadError("time-sync payload must be 25 bytes");
    ByteReader r(bytes);
    TimeSyncPayload p;
    const auto kind = r.u8();
    if (kind < 1 || kind > 3)
        throw PayloadError("unknown time-sync kind");
    p.kind = static_cast<SyncKind>(kind);
    p.a = r.i64();
    p.b = r.i64();
    p.c = r.i64();
    return p;
}

std::vector<std::uint8_t> encode_ack_payload(const AckPayload& p) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(p.acked_type));
    w.u32(p.acked_seq);
    return w.take();
}

AckPayload decode_ack_payload(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 5)
        throw PayloadError("ack payload must be 5 bytes");
    ByteReader r(bytes);
    const auto t = r.u8();
    if (!is_known_frame_type(t))
        throw PayloadError("ack names an unknown frame type");
    AckPayload p;
    p.acked_type = static_cast<FrameType>(t);
    p.acked_seq = r.u32();
    return p;
}

} // namespace openhealth
