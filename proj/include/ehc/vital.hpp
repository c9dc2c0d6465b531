#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ehc {

using NodeId = std::uint16_t;
using PatientId = std::int64_t;
/// Milliseconds since the Unix epoch (simulated or wall clock).
using TimestampMs = std::uint64_t;

/// Measured vital channel. Underlying values are the wire codes.
enum class VitalKind : std::uint8_t {
    BodyTemperature = 0x01,  // degC
    HeartRate = 0x02,        // bpm
    SystolicBP = 0x03,       // mmHg
    DiastolicBP = 0x04,      // mmHg
    BloodGlucose = 0x05,     // mg/dL
};

inline constexpr std::size_t kVitalKindCount = 5;

inline constexpr std::array<VitalKind, kVitalKindCount> kAllVitalKinds{
    VitalKind::BodyTemperature, VitalKind::HeartRate, VitalKind::SystolicBP,
    VitalKind::DiastolicBP, VitalKind::BloodGlucose};

/// Channels a bracelet carries unless configured otherwise. Glucose is opt-in.
inline constexpr std::array<VitalKind, 4> kDefaultVitalKinds{
    VitalKind::BodyTemperature, VitalKind::HeartRate, VitalKind::SystolicBP,
    VitalKind::DiastolicBP};

constexpr std::size_t index_of(VitalKind k) noexcept {
    return static_cast<std::size_t>(k) - 1;
}

constexpr std::uint8_t wire_code(VitalKind k) noexcept {
    return static_cast<std::uint8_t>(k);
}

std::optional<VitalKind> vital_kind_from_code(std::uint8_t code) noexcept;
std::string_view to_string(VitalKind k) noexcept;
std::string_view unit_of(VitalKind k) noexcept;
/// Accepts the enumerator name ("HeartRate"), case-insensitively.
std::optional<VitalKind> parse_vital_kind(std::string_view text) noexcept;

/// Classification tier. Ordered: Normal < Warning < Critical.
enum class Band : std::uint8_t { Normal = 0, Warning = 1, Critical = 2 };

std::string_view to_string(Band b) noexcept;
std::optional<Band> parse_band(std::string_view text) noexcept;

constexpr bool is_abnormal(Band b) noexcept { return b != Band::Normal; }

/// Smallest and largest physical values representable at 0.1 precision in
/// a signed 16-bit fixed-point field.
inline constexpr std::int32_t kMinValueX10 = -32768;
inline constexpr std::int32_t kMaxValueX10 = 32767;

constexpr double from_x10(std::int32_t value_x10) noexcept { return value_x10 / 10.0; }

/// Rounds a physical value to the nearest 0.1 and saturates into int16.
std::int16_t to_x10(double value) noexcept;

}  // namespace ehc
