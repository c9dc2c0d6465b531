#include "ehc/protocol.hpp"

#include <bitset>
#include <cctype>

namespace ehc::protocol {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
    std::array<std::uint16_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
        table[i] = crc;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_u16(Frame& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint16_t>((in[at] << 8) | in[at + 1]);
}

void check_kinds(std::span<const VitalSample> samples) {
    std::bitset<kVitalKindCount> seen;
    for (const auto& s : samples) {
        if (!vital_kind_from_code(wire_code(s.kind))) {
            throw InvalidPacket("sample kind has no wire code");
        }
        if (seen.test(index_of(s.kind))) {
            throw InvalidPacket("duplicate kind " + std::string(to_string(s.kind)));
        }
        seen.set(index_of(s.kind));
    }
}

}  // namespace

std::string_view to_string(DecodeErrc e) noexcept {
    switch (e) {
        case DecodeErrc::Truncated: return "Truncated";
        case DecodeErrc::BadMagic: return "BadMagic";
        case DecodeErrc::UnsupportedVersion: return "UnsupportedVersion";
        case DecodeErrc::BadSampleCount: return "BadSampleCount";
        case DecodeErrc::LengthMismatch: return "LengthMismatch";
        case DecodeErrc::CrcMismatch: return "CrcMismatch";
        case DecodeErrc::UnknownKind: return "UnknownKind";
        case DecodeErrc::DuplicateKind: return "DuplicateKind";
    }
    return "?";
}

DecodeError::DecodeError(DecodeErrc code)
    : Error("decode failed: " + std::string(to_string(code))), code_(code) {}

std::uint16_t crc16(std::span<const std::uint8_t> data) noexcept {
    std::uint16_t crc = 0xFFFF;
    for (auto byte : data) {
        crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ byte) & 0xFF]);
    }
    return crc;
}

Frame encode_packet(const TelemetryPacket& packet) {
    const auto n = packet.samples.size();
    if (n == 0 || n > kMaxSamples) {
        throw InvalidPacket("sample count must be 1.." + std::to_string(kMaxSamples) + ", got " +
                            std::to_string(n));
    }
    check_kinds(packet.samples);

    Frame out;
    out.reserve(frame_size(n));
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(kVersion);
    put_u16(out, packet.node_id);
    put_u16(out, packet.seq);
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(packet.timestamp_ms >> shift));
    }
    out.push_back(static_cast<std::uint8_t>(n));
    for (const auto& s : packet.samples) {
        out.push_back(wire_code(s.kind));
        put_u16(out, static_cast<std::uint16_t>(s.value_x10));
    }
    put_u16(out, crc16(out));
    return out;
}

TelemetryPacket decode_packet(std::span<const std::uint8_t> frame) {
    if (frame.size() < kHeaderSize) throw DecodeError(DecodeErrc::Truncated);
    if (frame[0] != kMagic0 || frame[1] != kMagic1) throw DecodeError(DecodeErrc::BadMagic);
    if (frame[2] != kVersion) throw DecodeError(DecodeErrc::UnsupportedVersion);

    const std::size_t n = frame[15];
    if (n == 0 || n > kMaxSamples) throw DecodeError(DecodeErrc::BadSampleCount);
    if (frame.size() < frame_size(n)) throw DecodeError(DecodeErrc::Truncated);
    if (frame.size() != frame_size(n)) throw DecodeError(DecodeErrc::LengthMismatch);

    const std::size_t body = frame.size() - kCrcSize;
    if (crc16(frame.first(body)) != get_u16(frame, body)) {
        throw DecodeError(DecodeErrc::CrcMismatch);
    }

    TelemetryPacket p;
    p.node_id = get_u16(frame, 3);
    p.seq = get_u16(frame, 5);
    for (std::size_t i = 7; i < 15; ++i) p.timestamp_ms = (p.timestamp_ms << 8) | frame[i];

    p.samples.reserve(n);
    std::bitset<kVitalKindCount> seen;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = kHeaderSize + i * kSampleSize;
        auto kind = vital_kind_from_code(frame[at]);
        if (!kind) throw DecodeError(DecodeErrc::UnknownKind);
        if (seen.test(index_of(*kind))) throw DecodeError(DecodeErrc::DuplicateKind);
        seen.set(index_of(*kind));
        p.samples.push_back({*kind, static_cast<std::int16_t>(get_u16(frame, at + 1))});
    }
    return p;
}

std::string to_hex(std::span<const std::uint8_t> bytes, bool spaced) {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(bytes.size() * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (spaced && i > 0) out.push_back(' ');
        out.push_back(kDigits[bytes[i] >> 4]);
        out.push_back(kDigits[bytes[i] & 0xF]);
    }
    return out;
}

Frame from_hex(std::string_view text) {
    Frame out;
    int pending = -1;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw Error(std::string("invalid hex character '") + c + "'");
        if (pending < 0) {
            pending = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((pending << 4) | v));
            pending = -1;
        }
    }
    if (pending >= 0) throw Error("odd number of hex digits");
    return out;
}

SeqVerdict SequenceTracker::track(NodeId node, std::uint16_t seq) {
    auto [it, inserted] = nodes_.try_emplace(node);
    Window& w = it->second;
    if (inserted) {
        w.highest = seq;
        w.seen = 1;
        return SeqVerdict::Fresh(0);
    }

    // Serial-number distance; the half-range point (-32768) reads as "older".
    const auto diff = static_cast<std::int16_t>(static_cast<std::uint16_t>(seq - w.highest));
    if (diff > 0) {
        const int ahead = diff;
        w.seen = ahead >= kWindow ? 0 : (w.seen << ahead);
        w.seen |= 1;
        w.highest = seq;
        return SeqVerdict::Fresh(static_cast<std::uint32_t>(ahead - 1));
    }
    const int behind = -static_cast<int>(diff);
    if (behind >= kWindow) return SeqVerdict::Duplicate();
    const std::uint64_t bit = std::uint64_t{1} << behind;
    if (w.seen & bit) return SeqVerdict::Duplicate();
    w.seen |= bit;
    return SeqVerdict::Fresh(0);
}

}  // namespace ehc::protocol
