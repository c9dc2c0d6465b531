#include "ehc/engine.hpp"

#include <algorithm>
#include <cmath>

namespace ehc::engine {

std::string_view to_string(AlertCause c) noexcept {
    return c == AlertCause::Trend ? "trend" : "threshold";
}

Band classify(VitalKind kind, double value, const kb::KnowledgeBase& kb) {
    const auto* table = kb.table(kind);
    if (!table) throw UnknownKind("no band table for " + std::string(to_string(kind)));
    return table->classify(value);
}

std::optional<TrendViolation> trend_check(VitalKind kind, std::span<const TimedValue> window,
                                          const kb::KnowledgeBase& kb) {
    const auto* rule = kb.trend(kind);
    if (!rule || window.empty()) return std::nullopt;

    const TimestampMs newest = window.back().timestamp_ms;
    const auto span_ms = static_cast<TimestampMs>(std::llround(rule->window_s * 1000.0));
    const TimestampMs cutoff = newest > span_ms ? newest - span_ms : 0;

    std::int32_t lo = window.back().value_x10, hi = lo;
    TimestampMs oldest = newest;
    for (auto it = window.rbegin(); it != window.rend() && it->timestamp_ms >= cutoff; ++it) {
        lo = std::min<std::int32_t>(lo, it->value_x10);
        hi = std::max<std::int32_t>(hi, it->value_x10);
        oldest = it->timestamp_ms;
    }
    const double delta = from_x10(hi - lo);
    if (delta > rule->max_abs_delta) {
        return TrendViolation{delta, static_cast<double>(newest - oldest) / 1000.0};
    }
    return std::nullopt;
}

std::optional<EngineEvent> update_state(PatientVitalState& state, PatientId patient,
                                        const ClassifiedSample& sample, const kb::KnowledgeBase& kb) {
    auto& ch = state.channel(sample.kind);
    if (ch.last_timestamp_ms && sample.timestamp_ms < *ch.last_timestamp_ms) {
        throw OutOfOrderSample("sample for patient " + std::to_string(patient) + " " +
                               std::string(to_string(sample.kind)) + " is older than the previous one");
    }
    ch.last_timestamp_ms = sample.timestamp_ms;

    // Keep only what the longest trend window can still see.
    ch.window.push_back({sample.timestamp_ms, sample.value_x10});
    const auto keep_ms = static_cast<TimestampMs>(std::llround(kb.max_trend_window_s() * 1000.0));
    while (ch.window.size() > 1 && ch.window.front().timestamp_ms + keep_ms < sample.timestamp_ms) {
        ch.window.pop_front();
    }

    std::optional<TrendViolation> trend;
    if (kb.trend(sample.kind)) {
        const std::vector<TimedValue> snapshot(ch.window.begin(), ch.window.end());
        trend = trend_check(sample.kind, snapshot, kb);
    }

    Band effective = sample.band;
    if (effective == Band::Normal && trend) effective = Band::Warning;

    const auto& d = kb.debounce;
    if (effective == Band::Normal) {
        ch.out_of_normal_run = 0;
        ch.critical_run = 0;
        if (!ch.active) return std::nullopt;
        if (++ch.normal_run < static_cast<std::uint32_t>(d.m_clear)) return std::nullopt;
        ch.active = false;
        ch.normal_run = 0;
        return ClearEvent{patient, sample.kind, ch.active_band, sample.timestamp_ms, sample.value_x10,
                          sample.timestamp_ms};
    }

    ch.normal_run = 0;
    ++ch.out_of_normal_run;
    ch.critical_run = effective == Band::Critical ? ch.critical_run + 1 : 0;
    if (ch.active) return std::nullopt;

    const bool critical_due = ch.critical_run >= static_cast<std::uint32_t>(d.n_critical_raise);
    const bool warning_due = ch.out_of_normal_run >= static_cast<std::uint32_t>(d.n_warning_raise);
    if (!critical_due && !warning_due) return std::nullopt;

    ch.active = true;
    ch.active_band = effective;
    AlertEvent ev;
    ev.patient_id = patient;
    ev.kind = sample.kind;
    ev.band = effective;
    ev.cause = (sample.band == Band::Normal && trend) ? AlertCause::Trend : AlertCause::Threshold;
    ev.reading_timestamp_ms = sample.timestamp_ms;
    ev.value_x10 = sample.value_x10;
    ev.trend = trend;
    ev.raised_at = sample.timestamp_ms;
    return ev;
}

}  // namespace ehc::engine
