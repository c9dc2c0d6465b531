#include "ehc/vital.hpp"

#include "ehc/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace ehc {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
          std::string msg = "validation failed";
          for (const auto& v : violations) {
              msg += "; ";
              msg += v;
          }
          return msg;
      }()),
      violations_(std::move(violations)) {}

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::optional<VitalKind> vital_kind_from_code(std::uint8_t code) noexcept {
    if (code >= 0x01 && code <= 0x05) return static_cast<VitalKind>(code);
    return std::nullopt;
}

std::string_view to_string(VitalKind k) noexcept {
    switch (k) {
        case VitalKind::BodyTemperature: return "BodyTemperature";
        case VitalKind::HeartRate: return "HeartRate";
        case VitalKind::SystolicBP: return "SystolicBP";
        case VitalKind::DiastolicBP: return "DiastolicBP";
        case VitalKind::BloodGlucose: return "BloodGlucose";
    }
    return "?";
}

std::string_view unit_of(VitalKind k) noexcept {
    switch (k) {
        case VitalKind::BodyTemperature: return "degC";
        case VitalKind::HeartRate: return "bpm";
        case VitalKind::SystolicBP:
        case VitalKind::DiastolicBP: return "mmHg";
        case VitalKind::BloodGlucose: return "mg/dL";
    }
    return "?";
}

std::optional<VitalKind> parse_vital_kind(std::string_view text) noexcept {
    for (auto k : kAllVitalKinds) {
        if (iequals(text, to_string(k))) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Band b) noexcept {
    switch (b) {
        case Band::Normal: return "Normal";
        case Band::Warning: return "Warning";
        case Band::Critical: return "Critical";
    }
    return "?";
}

std::optional<Band> parse_band(std::string_view text) noexcept {
    for (auto b : {Band::Normal, Band::Warning, Band::Critical}) {
        if (iequals(text, to_string(b))) return b;
    }
    return std::nullopt;
}

std::int16_t to_x10(double value) noexcept {
    const double scaled = std::round(value * 10.0);
    if (std::isnan(scaled)) return 0;
    return static_cast<std::int16_t>(
        std::clamp(scaled, static_cast<double>(kMinValueX10), static_cast<double>(kMaxValueX10)));
}

}  // namespace ehc
