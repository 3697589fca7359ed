#pragma once

// Device <-> host wire frame.
//
//   offset  size  field
//   0       1     version (= 1)
//   1       1     frame_type
//   2       2     device_id (big-endian)
//   4       4     seq (big-endian)
//   8       2     payload_len (big-endian)
//   10      n     AES-128-GCM ciphertext of the payload
//   10+n    16    tag
//
// The 10 header bytes are associated data. Nonce = device_id || seq || six
// zero bytes. Uplink (device) sequence numbers live in [1, 2^31), downlink
// (host) numbers have the top bit set, so one key never sees a repeated
// nonce across directions.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "openhealth/aead.hpp"
#include "openhealth/core.hpp"
#include "openhealth/firmware.hpp"

namespace openhealth {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 10;
inline constexpr std::size_t kFrameOverheadBytes = kFrameHeaderBytes + kTagBytes;
inline constexpr std::size_t kMaxPayloadBytes = 1024;
inline constexpr std::uint32_t kDownlinkSeqBit = 0x8000'0000u;

enum class FrameType : std::uint8_t { Hello = 1, TimeSync = 2, Data = 3, Alert = 4, Ack = 5, Config = 6 };

std::string_view frame_type_name(FrameType t);
bool is_known_frame_type(std::uint8_t v);

struct Frame {
    FrameType type = FrameType::Data;
    std::uint16_t device_id = 0;
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

class PayloadTooLong : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

Nonce frame_nonce(std::uint16_t device_id, std::uint32_t seq);

// Throws PayloadTooLong above kMaxPayloadBytes.
std::vector<std::uint8_t> encode_frame(FrameType type, std::uint16_t device_id, std::uint32_t seq,
                                       std::span<const std::uint8_t> payload, const Key& key);

// As encode_frame but with an arbitrary version byte; lets tests produce
// well-authenticated frames of a future protocol version.
std::vector<std::uint8_t> encode_frame_with_version(std::uint8_t version, FrameType type, std::uint16_t device_id,
                                                    std::uint32_t seq, std::span<const std::uint8_t> payload,
                                                    const Key& key);

enum class DecodeStatus : std::uint8_t {
    Ok,
    Truncated,      // shorter than the header says
    AuthFailure,    // tag mismatch over header + ciphertext
    UnknownVersion, // authenticated, but not version 1
    LengthMismatch, // authenticated, but trailing bytes beyond payload_len
    UnknownType,    // authenticated, but frame_type not in the table
    ReplayRejected, // authenticated, but seq already accepted or too old
    UnknownDevice,  // no key registered for device_id (gateway level)
    MalformedPayload, // authenticated, but the payload fails its codec (gateway level)
};

std::string_view decode_status_name(DecodeStatus s);

// Anti-replay state for one (device, direction) session. Accepts seq above
// the highest seen, or within `width` below it if not yet seen. width 0 is
// strict monotonicity.
class ReplayWindow {
  public:
    static constexpr std::uint32_t kMaxWidth = 64;

    explicit ReplayWindow(std::uint32_t width = kMaxWidth);

    bool would_accept(std::uint32_t seq) const;
    void accept(std::uint32_t seq);
    std::uint32_t highest() const { return highest_; }

  private:
    std::uint32_t width_;
    std::uint32_t highest_ = 0;
    std::uint64_t seen_ = 0; // bit i: highest_ - i accepted
};

struct DecodeOutcome {
    DecodeStatus status = DecodeStatus::Truncated;
    // Header fields are filled whenever the header could be read; payload
    // only once the tag verified.
    Frame frame;
    bool ok() const { return status == DecodeStatus::Ok; }
};

struct FrameHeader {
    std::uint8_t version = 0;
    std::uint8_t type = 0;
    std::uint16_t device_id = 0;
    std::uint32_t seq = 0;
    std::uint16_t payload_len = 0;
};

std::optional<FrameHeader> peek_header(std::span<const std::uint8_t> bytes);

// Authenticates and parses without touching replay state.
DecodeOutcome open_frame(std::span<const std::uint8_t> bytes, const Key& key);

// open_frame plus the replay rule; accepted frames update `window`.
DecodeOutcome decode_frame(std::span<const std::uint8_t> bytes, const Key& key, ReplayWindow& window);

// Per-direction sequence source; strictly increasing, throws on wrap.
class SeqCounter {
  public:
    explicit SeqCounter(bool downlink = false) : next_(downlink ? kDownlinkSeqBit | 1u : 1u), downlink_(downlink) {}
    std::uint32_t next();
    std::uint32_t peek() const { return next_; }

  private:
    std::uint32_t next_;
    bool downlink_;
};

// ---- payloads ------------------------------------------------------------

inline constexpr std::uint16_t kConfidenceScale = 10000;

// DATA and ALERT payload, 12 bytes:
//   timestamp_ms i64 | label_index u8 | confidence u16 (0..10000) | app_id u8
struct DataPayload {
    std::int64_t timestamp_ms = 0;
    std::uint8_t label_index = 0;
    std::uint16_t confidence = 0;
    AppKind app = AppKind::Har;

    static DataPayload from_inference(const InferenceOutput& out);
    friend bool operator==(const DataPayload&, const DataPayload&) = default;
};

class PayloadError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

std::vector<std::uint8_t> encode_data_payload(const DataPayload& p);
DataPayload decode_data_payload(std::span<const std::uint8_t> bytes);

// TIME_SYNC payload, 25 bytes: kind u8 | a i64 | b i64 | c i64
//   Request : a = t1 (device clock)
//   Response: a = t1 echoed, b = t2 host receive, c = t3 host send
//   Report  : a = offset estimate in microseconds, b = round-trip ms, c = 0
enum class SyncKind : std::uint8_t { Request = 1, Response = 2, Report = 3 };

struct TimeSyncPayload {
    SyncKind kind = SyncKind::Request;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
    friend bool operator==(const TimeSyncPayload&, const TimeSyncPayload&) = default;
};

std::vector<std::uint8_t> encode_sync_payload(const TimeSyncPayload& p);
TimeSyncPayload decode_sync_payload(std::span<const std::uint8_t> bytes);

// ACK payload, 5 bytes: acked frame_type u8 | acked seq u32
struct AckPayload {
    FrameType acked_type = FrameType::Alert;
    std::uint32_t acked_seq = 0;
    friend bool operator==(const AckPayload&, const AckPayload&) = default;
};

std::vector<std::uint8_t> encode_ack_payload(const AckPayload& p);
AckPayload decode_ack_payload(std::span<const std::uint8_t> bytes);

} // namespace openhealth
