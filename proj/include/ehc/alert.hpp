#pragma once

#include "ehc/engine.hpp"
#include "ehc/notify.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ehc {

enum class AlertState : std::uint8_t { Open, Acked, Closed };

std::string_view to_string(AlertState s) noexcept;
std::optional<AlertState> parse_alert_state(std::string_view text) noexcept;

/// Alert lifecycle: Open -> Acked -> Closed, or Open -> Closed when the
/// condition clears before anyone acknowledges it ("cleared-unacked").
struct Alert {
    std::uint64_t alert_id{0};
    engine::AlertEvent event;
    AlertState state{AlertState::Open};
    std::set<notify::Role> routed_roles;
    TimestampMs created_at{0};
    TimestampMs last_notified_at{0};
    std::optional<std::string> acked_by;
    std::optional<notify::Role> acked_role;
    std::optional<TimestampMs> acked_at;
    std::optional<TimestampMs> closed_at;
    std::string close_note;
    std::uint32_t renotify_count{0};
    bool escalation_exhausted{false};

    friend bool operator==(const Alert&, const Alert&) = default;
};

/// Severity to roles. Critical must reach everyone Warning reaches.
struct RoutingRule {
    std::set<notify::Role> warning{notify::Role::Nurse};
    std::set<notify::Role> critical{notify::Role::Nurse, notify::Role::Physician};

    const std::set<notify::Role>& roles_for(Band band) const noexcept {
        return band == Band::Critical ? critical : warning;
    }
    /// Throws ValidationError when Critical does not cover Warning.
    void validate() const;
};

struct EscalationPolicy {
    std::uint32_t critical_interval_s{120};
    std::uint32_t warning_interval_s{300};
    std::uint32_t max_renotifications{5};

    TimestampMs interval_ms(Band band) const noexcept {
        return 1000ull * (band == Band::Critical ? critical_interval_s : warning_interval_s);
    }
};

}  // namespace ehc
