#pragma once

#include "ehc/alert.hpp"
#include "ehc/clock.hpp"
#include "ehc/engine.hpp"
#include "ehc/events.hpp"
#include "ehc/knowledge_base.hpp"
#include "ehc/notify.hpp"
#include "ehc/protocol.hpp"
#include "ehc/store.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ehc {

class UnknownAlert : public NotFoundError {
public:
    explicit UnknownAlert(std::uint64_t id) : NotFoundError("unknown alert " + std::to_string(id)) {}
};

struct GatewayConfig {
    std::map<NodeId, PatientId> node_patients;
    /// With no explicit mapping, node id N reports for patient N.
    bool identity_fallback{true};
    RoutingRule routing;
    EscalationPolicy escalation;

    std::optional<PatientId> patient_for(NodeId node) const;
};

struct IngestResult {
    enum class Disposition { Stored, Duplicate, Rejected };

    Disposition disposition{Disposition::Rejected};
    /// Decode error name or mapping failure when Rejected.
    std::string reason;
    std::vector<std::uint64_t> raised_alerts;

    static IngestResult stored() { return {Disposition::Stored, {}, {}}; }
    static IngestResult duplicate() { return {Disposition::Duplicate, {}, {}}; }
    static IngestResult rejected(std::string why) { return {Disposition::Rejected, std::move(why), {}}; }
};

std::string_view to_string(IngestResult::Disposition d) noexcept;

/// The ingestion and alerting service. Safe to call from several threads:
/// frames for different patients proceed in parallel, frames for one patient
/// are serialized through that patient's pipeline.
class Gateway {
public:
    /// Rebuilds alert state from the store's alert log. Throws
    /// ValidationError when the routing rule is malformed.
    Gateway(GatewayConfig config, store::PatientStore& store, kb::KnowledgeBase kb, const Clock& clock);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    IngestResult ingest(std::span<const std::uint8_t> frame, TimestampMs arrival_ms);

    /// First notification round (attempt 1) for an Open alert; nothing for
    /// Acked or Closed ones.
    std::vector<notify::NotificationMessage> dispatch_alert(std::uint64_t alert_id);

    /// Renotifies every Open alert whose interval has elapsed since its last
    /// notification. Rounds missed between calls are caught up, each stamped
    /// at its scheduled time. Returns the messages sent.
    std::vector<notify::NotificationMessage> escalate(TimestampMs now);

    /// Idempotent for alerts that are no longer Open. Throws UnknownAlert.
    Alert ack_alert(std::uint64_t alert_id, const std::string& user, notify::Role role);

    std::vector<Alert> alerts(std::optional<AlertState> state = std::nullopt) const;
    std::optional<Alert> alert(std::uint64_t alert_id) const;

    kb::KnowledgeBase knowledge_base() const;
    /// Validates, persists and activates a new revision. Throws ValidationError.
    kb::KnowledgeBase update_kb(const kb::KbProposal& proposal, const std::string& author);

    void add_sink(notify::Role role, std::shared_ptr<notify::NotificationSink> sink);

    EventBus& events() noexcept { return bus_; }
    store::PatientStore& store() noexcept { return store_; }
    const Clock& clock() const noexcept { return clock_; }
    const GatewayConfig& config() const noexcept { return config_; }

    std::map<std::string, std::uint64_t> metrics() const;
    void flush_metrics();

private:
    struct Pipeline {
        std::mutex mu;
        engine::PatientVitalState state;
    };

    struct Counters {
        std::atomic<std::uint64_t> frames_received{0};
        std::atomic<std::uint64_t> frames_stored{0};
        std::atomic<std::uint64_t> frames_duplicate{0};
        std::atomic<std::uint64_t> frames_rejected{0};
        std::atomic<std::uint64_t> readings_stored{0};
        std::atomic<std::uint64_t> samples_out_of_order{0};
        std::atomic<std::uint64_t> sequence_gaps{0};
        std::atomic<std::uint64_t> alerts_raised{0};
        std::atomic<std::uint64_t> alerts_acked{0};
        std::atomic<std::uint64_t> alerts_escalated{0};
        std::atomic<std::uint64_t> alerts_exhausted{0};
        std::atomic<std::uint64_t> alerts_closed{0};
        std::atomic<std::uint64_t> notifications_sent{0};
    };

    Pipeline& pipeline_for(PatientId patient);
    std::shared_ptr<const kb::KnowledgeBase> current_kb() const;
    void restore_alerts();
    std::uint64_t raise(const engine::AlertEvent& ev, TimestampMs now,
                        std::vector<notify::NotificationMessage>& outbox);
    void clear(const engine::ClearEvent& ev, TimestampMs now);
    std::vector<notify::NotificationMessage> notify_round(Alert& alert, std::uint32_t attempt,
                                                         TimestampMs at);
    void deliver(const std::vector<notify::NotificationMessage>& messages);
    void log(const Alert& alert, store::AlertLogEvent event, TimestampMs at, std::string detail);

    GatewayConfig config_;
    store::PatientStore& store_;
    const Clock& clock_;
    EventBus bus_;

    mutable std::shared_mutex kb_mu_;
    std::shared_ptr<const kb::KnowledgeBase> kb_;

    std::mutex tracker_mu_;
    protocol::SequenceTracker tracker_;

    std::mutex pipelines_mu_;
    std::unordered_map<PatientId, std::unique_ptr<Pipeline>> pipelines_;

    mutable std::mutex alerts_mu_;
    std::map<std::uint64_t, Alert> alerts_;
    /// (patient, kind index) -> alert not yet Closed.
    std::map<std::pair<PatientId, std::size_t>, std::uint64_t> live_;
    std::uint64_t next_alert_id_{1};

    mutable std::mutex sinks_mu_;
    std::multimap<notify::Role, std::shared_ptr<notify::NotificationSink>> sinks_;

    Counters counters_;
};

/// "Patient 23: Critical BodyTemperature 39.3 °C (threshold)".
std::string alert_text(const Alert& alert);

}  // namespace ehc
