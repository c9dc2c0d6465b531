#pragma once

#include "ehc/error.hpp"
#include "ehc/vital.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ehc::protocol {

/// Bracelet datagram layout, big-endian throughout:
///
///   offset  size  field
///   0       2     magic 0xEB 0xCA
///   2       1     version 0x01
///   3       2     node_id
///   5       2     seq
///   7       8     timestamp_ms
///   15      1     sample count N (1..8)
///   16      3N    samples {kind code u8, value_x10 i16}
///   16+3N   2     CRC-16/CCITT-FALSE over bytes [0, 16+3N)
inline constexpr std::uint8_t kMagic0 = 0xEB;
inline constexpr std::uint8_t kMagic1 = 0xCA;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kSampleSize = 3;
inline constexpr std::size_t kMaxSamples = 8;

constexpr std::size_t frame_size(std::size_t sample_count) noexcept {
    return kHeaderSize + kSampleSize * sample_count + kCrcSize;
}

struct VitalSample {
    VitalKind kind{VitalKind::BodyTemperature};
    std::int16_t value_x10{0};

    double value() const noexcept { return from_x10(value_x10); }
    friend bool operator==(const VitalSample&, const VitalSample&) = default;
};

struct TelemetryPacket {
    NodeId node_id{0};
    std::uint16_t seq{0};
    TimestampMs timestamp_ms{0};
    std::vector<VitalSample> samples;

    friend bool operator==(const TelemetryPacket&, const TelemetryPacket&) = default;
};

using Frame = std::vector<std::uint8_t>;

class InvalidPacket : public Error {
public:
    using Error::Error;
};

enum class DecodeErrc {
    Truncated,
    BadMagic,
    UnsupportedVersion,
    BadSampleCount,
    LengthMismatch,
    CrcMismatch,
    UnknownKind,
    DuplicateKind,
};

std::string_view to_string(DecodeErrc e) noexcept;

class DecodeError : public Error {
public:
    explicit DecodeError(DecodeErrc code);
    DecodeErrc code() const noexcept { return code_; }

private:
    DecodeErrc code_;
};

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> data) noexcept;

/// Throws InvalidPacket when the sample list is empty, longer than 8, or
/// repeats a kind.
Frame encode_packet(const TelemetryPacket& packet);

/// Throws DecodeError. Length is checked against the declared sample count
/// before the CRC, so a flipped count bit surfaces as a length error.
TelemetryPacket decode_packet(std::span<const std::uint8_t> frame);

std::string to_hex(std::span<const std::uint8_t> bytes, bool spaced = false);
/// Accepts upper/lower case with optional whitespace between bytes.
/// Throws Error on odd digit count or non-hex characters.
Frame from_hex(std::string_view text);

/// Result of feeding a sequence number to a SequenceTracker.
struct SeqVerdict {
    enum class Kind { Fresh, Duplicate };
    Kind kind{Kind::Fresh};
    /// Number of never-seen sequence numbers skipped (Fresh only).
    std::uint32_t gap{0};

    bool fresh() const noexcept { return kind == Kind::Fresh; }
    friend bool operator==(const SeqVerdict&, const SeqVerdict&) = default;

    static SeqVerdict Fresh(std::uint32_t gap) { return {Kind::Fresh, gap}; }
    static SeqVerdict Duplicate() { return {Kind::Duplicate, 0}; }
};

/// Per-node sliding window over the 64 most recent sequence numbers, using
/// 16-bit serial-number arithmetic so the counter may wrap. Anything older
/// than the window counts as a duplicate. Single owner; not thread-safe.
class SequenceTracker {
public:
    static constexpr int kWindow = 64;

    SeqVerdict track(NodeId node, std::uint16_t seq);
    void reset() { nodes_.clear(); }

private:
    struct Window {
        std::uint16_t highest{0};
        // bit i set <=> (highest - i) has been seen
        std::uint64_t seen{0};
    };
    std::unordered_map<NodeId, Window> nodes_;
};

}  // namespace ehc::protocol
