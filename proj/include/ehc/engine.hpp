#pragma once

#include "ehc/error.hpp"
#include "ehc/knowledge_base.hpp"
#include "ehc/vital.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <variant>

namespace ehc::engine {

class UnknownKind : public Error {
public:
    using Error::Error;
};

/// Throws UnknownKind when the knowledge base has no table for `kind`.
Band classify(VitalKind kind, double value, const kb::KnowledgeBase& kb);

struct TimedValue {
    TimestampMs timestamp_ms{0};
    std::int16_t value_x10{0};
};

struct TrendViolation {
    double observed_delta{0.0};
    double window_span_s{0.0};

    friend bool operator==(const TrendViolation&, const TrendViolation&) = default;
};

/// Checks the samples whose timestamp lies within the trailing window_s of
/// the newest one. Violation iff (max - min) strictly exceeds max_abs_delta.
/// Returns nullopt when the kind has no trend rule. `window` must be sorted.
std::optional<TrendViolation> trend_check(VitalKind kind, std::span<const TimedValue> window,
                                          const kb::KnowledgeBase& kb);

struct ClassifiedSample {
    VitalKind kind{VitalKind::BodyTemperature};
    TimestampMs timestamp_ms{0};
    std::int16_t value_x10{0};
    Band band{Band::Normal};
};

enum class AlertCause : std::uint8_t { Threshold, Trend };

std::string_view to_string(AlertCause c) noexcept;

struct AlertEvent {
    PatientId patient_id{0};
    VitalKind kind{VitalKind::BodyTemperature};
    Band band{Band::Warning};
    AlertCause cause{AlertCause::Threshold};
    TimestampMs reading_timestamp_ms{0};
    std::int16_t value_x10{0};
    std::optional<TrendViolation> trend;
    TimestampMs raised_at{0};

    friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

struct ClearEvent {
    PatientId patient_id{0};
    VitalKind kind{VitalKind::BodyTemperature};
    Band band_at_raise{Band::Warning};
    TimestampMs reading_timestamp_ms{0};
    std::int16_t value_x10{0};
    TimestampMs cleared_at{0};

    friend bool operator==(const ClearEvent&, const ClearEvent&) = default;
};

using EngineEvent = std::variant<AlertEvent, ClearEvent>;

/// Debounce and trend state for one (patient, kind).
struct ChannelState {
    std::deque<TimedValue> window;
    std::uint32_t out_of_normal_run{0};
    std::uint32_t critical_run{0};
    std::uint32_t normal_run{0};
    bool active{false};
    Band active_band{Band::Normal};
    std::optional<TimestampMs> last_timestamp_ms;
};

struct PatientVitalState {
    std::array<ChannelState, kVitalKindCount> channels{};

    ChannelState& channel(VitalKind k) { return channels[index_of(k)]; }
    const ChannelState& channel(VitalKind k) const { return channels[index_of(k)]; }
};

class OutOfOrderSample : public Error {
public:
    using Error::Error;
};

/// Advances the debounce state machine by one received sample.
///
/// The effective band is the classified band, raised to Warning when the
/// trend rule fires on a Normal sample. While no condition is active, an
/// AlertEvent is emitted once the run of consecutive Critical samples reaches
/// n_critical_raise or the run of consecutive out-of-normal samples reaches
/// n_warning_raise. An active condition absorbs further abnormal samples and
/// clears after m_clear consecutive Normal samples.
///
/// Throws OutOfOrderSample when the timestamp precedes the previous one for
/// this channel; the state is left unchanged in that case.
std::optional<EngineEvent> update_state(PatientVitalState& state, PatientId patient,
                                        const ClassifiedSample& sample, const kb::KnowledgeBase& kb);

}  // namespace ehc::engine
