#pragma once

#include "ehc/vital.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ehc::report {

struct LatencyStats {
    std::uint64_t count{0};
    std::uint64_t min_ms{0};
    double median_ms{0.0};
    std::uint64_t max_ms{0};

    static LatencyStats of(std::vector<std::uint64_t> samples);
    friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

struct Counts {
    std::array<std::uint64_t, 3> readings_by_band{};  // Normal, Warning, Critical
    std::uint64_t alerts_warning{0};
    std::uint64_t alerts_critical{0};
    std::vector<std::uint64_t> ack_latencies_ms;
    std::uint64_t escalations{0};  // renotification rounds
    std::uint64_t exhausted{0};

    std::uint64_t readings_total() const noexcept;
    std::uint64_t alerts_total() const noexcept { return alerts_warning + alerts_critical; }
    LatencyStats ack_latency() const { return LatencyStats::of(ack_latencies_ms); }
    void add(const Counts& other);
};

struct ReportSummary {
    std::map<PatientId, Counts> patients;
    Counts totals;
    std::map<std::string, std::uint64_t> frame_metrics;
};

struct Window {
    std::optional<TimestampMs> from;  // inclusive
    std::optional<TimestampMs> to;    // inclusive
    bool contains(TimestampMs t) const noexcept {
        return (!from || t >= *from) && (!to || t <= *to);
    }
};

/// Computed from the store's files alone, without opening the store for
/// writing. Readings are windowed by reading timestamp, alerts by the time
/// they were raised. Throws Error when `store_dir` is not a directory.
ReportSummary summarize(const std::filesystem::path& store_dir, const Window& window = {});

std::string render_text(const ReportSummary& s);

/// Tab-separated; see docs/FORMATS.md. First block: one row per patient
/// then a TOTAL row. After a blank line: metric/value rows.
std::string render_tsv(const ReportSummary& s);

}  // namespace ehc::report
