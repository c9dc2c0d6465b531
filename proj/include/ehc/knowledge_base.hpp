#pragma once

#include "ehc/error.hpp"
#include "ehc/vital.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::kb {

/// Half-open interval [lo, hi) of physical values mapped to one band.
/// Infinite bounds mean "unbounded on that side".
struct BandInterval {
    double lo{0.0};
    double hi{0.0};
    Band band{Band::Normal};

    friend bool operator==(const BandInterval&, const BandInterval&) = default;
};

/// Validated band partition for one vital kind: bands[i] applies to
/// [breakpoints[i-1], breakpoints[i]) with -inf/+inf at the ends.
struct BandTable {
    VitalKind kind{VitalKind::BodyTemperature};
    std::vector<double> breakpoints;
    std::vector<Band> bands;

    Band classify(double value) const noexcept;
    std::vector<BandInterval> intervals() const;

    friend bool operator==(const BandTable&, const BandTable&) = default;
};

/// A band table as submitted by a physician, before validation. It may
/// contain gaps, overlaps or inverted bounds; validation reports them.
struct ProposedBandTable {
    VitalKind kind{VitalKind::BodyTemperature};
    std::vector<BandInterval> intervals;

    /// Expands breakpoints/bands into intervals. A count mismatch is kept
    /// in `shape_error` so validation can report it with everything else.
    static ProposedBandTable from_breakpoints(VitalKind kind, const std::vector<double>& breakpoints,
                                              const std::vector<Band>& bands);
    std::optional<std::string> shape_error;
};

/// "Sudden change" detector: the spread of values within the trailing
/// window must not exceed max_abs_delta.
struct TrendRule {
    VitalKind kind{VitalKind::BodyTemperature};
    double window_s{60.0};
    double max_abs_delta{0.0};

    friend bool operator==(const TrendRule&, const TrendRule&) = default;
};

struct DebounceConfig {
    int n_warning_raise{3};
    int n_critical_raise{1};
    int m_clear{5};

    friend bool operator==(const DebounceConfig&, const DebounceConfig&) = default;
};

struct KnowledgeBase {
    std::array<std::optional<BandTable>, kVitalKindCount> tables{};
    std::array<std::optional<TrendRule>, kVitalKindCount> trends{};
    DebounceConfig debounce;
    std::uint64_t revision{1};
    std::string author;
    TimestampMs updated_at{0};

    const BandTable* table(VitalKind k) const noexcept;
    const TrendRule* trend(VitalKind k) const noexcept;
    /// Longest trend window across kinds (0 when there are no trend rules).
    double max_trend_window_s() const noexcept;

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;
};

/// Complete replacement content for a knowledge base.
struct KbProposal {
    std::vector<ProposedBandTable> bands;
    std::vector<TrendRule> trends;
    DebounceConfig debounce;
};

/// Conventional adult ranges; see README for the table.
KnowledgeBase default_knowledge_base();

KbProposal to_proposal(const KnowledgeBase& kb);

/// Every rule the table breaks, judged over the representable fixed-point
/// domain (value_x10 in [-32768, 32767]): each value must fall in exactly
/// one interval. Empty means valid.
std::vector<std::string> validate_band_table(const ProposedBandTable& table);

/// Every rule the proposal breaks: band-table partition rules, one table per
/// vital kind, positive trend/debounce parameters.
std::vector<std::string> validate_proposal(const KbProposal& proposal);

/// Normalizes a table that passed validation into breakpoint form.
BandTable normalize(const ProposedBandTable& table);

/// Accepts the proposal as revision kb.revision + 1, or throws
/// ValidationError listing every violation and leaves kb untouched.
KnowledgeBase apply_kb_update(const KnowledgeBase& kb, const KbProposal& proposal,
                              std::string author, TimestampMs now);

/// KB text format: [meta], [bands <Kind>], [trend <Kind>], [debounce].
std::string save_kb(const KnowledgeBase& kb);
/// Throws kv::ParseError on syntax, ValidationError on rule violations.
KnowledgeBase load_kb(std::string_view text);
/// Parses the same format without validating; used for update submissions.
KbProposal parse_kb_proposal(std::string_view text);

}  // namespace ehc::kb
