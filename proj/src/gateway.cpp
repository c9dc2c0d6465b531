#include "ehc/gateway.hpp"

#include "ehc/kvtext.hpp"

#include <algorithm>
#include <sstream>

namespace ehc {

using notify::NotificationMessage;
using notify::Role;
using store::AlertLogEvent;

std::optional<PatientId> GatewayConfig::patient_for(NodeId node) const {
    if (auto it = node_patients.find(node); it != node_patients.end()) return it->second;
    if (identity_fallback && node_patients.empty()) return static_cast<PatientId>(node);
    return std::nullopt;
}

std::string_view to_string(IngestResult::Disposition d) noexcept {
    switch (d) {
        case IngestResult::Disposition::Stored: return "Stored";
        case IngestResult::Disposition::Duplicate: return "Duplicate";
        case IngestResult::Disposition::Rejected: return "Rejected";
    }
    return "?";
}

std::string alert_text(const Alert& a) {
    std::string s = "Patient " + std::to_string(a.event.patient_id) + ": " +
                    std::string(to_string(a.event.band)) + ' ' + std::string(to_string(a.event.kind)) + ' ' +
                    kv::format_number(from_x10(a.event.value_x10)) + ' ' + std::string(unit_of(a.event.kind));
    if (a.event.cause == engine::AlertCause::Trend && a.event.trend) {
        s += " (sudden change of " + kv::format_number(a.event.trend->observed_delta) + " within " +
             kv::format_number(a.event.trend->window_span_s) + " s)";
    } else {
        s += " (threshold)";
    }
    return s;
}

namespace {

std::string roles_field(const std::set<Role>& roles) {
    std::string out;
    for (auto r : roles) {
        if (!out.empty()) out += ',';
        out += to_string(r);
    }
    return out;
}

// Raised-entry detail: space-separated key=value pairs.
std::string raised_detail(const Alert& a) {
    std::string d = "cause=" + std::string(engine::to_string(a.event.cause)) +
                    " value_x10=" + std::to_string(a.event.value_x10) +
                    " reading_ts=" + std::to_string(a.event.reading_timestamp_ms) +
                    " roles=" + roles_field(a.routed_roles);
    if (a.event.trend) {
        d += " trend_delta=" + kv::format_number(a.event.trend->observed_delta) +
             " trend_span_s=" + kv::format_number(a.event.trend->window_span_s);
    }
    return d;
}

std::map<std::string, std::string> parse_detail(const std::string& detail) {
    std::map<std::string, std::string> out;
    std::istringstream in(detail);
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

std::uint64_t to_u64(const std::map<std::string, std::string>& m, const char* key) {
    auto it = m.find(key);
    return it == m.end() ? 0 : std::stoull(it->second);
}

}  // namespace

Gateway::Gateway(GatewayConfig config, store::PatientStore& store, kb::KnowledgeBase kb, const Clock& clock)
    : config_(std::move(config)),
      store_(store),
      clock_(clock),
      kb_(std::make_shared<const kb::KnowledgeBase>(std::move(kb))) {
    config_.routing.validate();
    restore_alerts();
}

Gateway::~Gateway() = default;

// Replays alerts.log so that a restarted gateway keeps escalating open
// alerts and the engine does not re-raise a condition that is still active.
void Gateway::restore_alerts() {
    for (const auto& e : store_.alert_log()) {
        next_alert_id_ = std::max(next_alert_id_, e.alert_id + 1);
        if (e.event == AlertLogEvent::Raised) {
            auto d = parse_detail(e.detail);
            Alert a;
            a.alert_id = e.alert_id;
            a.event.patient_id = e.patient_id;
            a.event.kind = e.kind;
            a.event.band = e.band;
            a.event.cause = d["cause"] == engine::to_string(engine::AlertCause::Trend)
                                ? engine::AlertCause::Trend
                                : engine::AlertCause::Threshold;
            a.event.value_x10 = static_cast<std::int16_t>(std::stoi(d.count("value_x10") ? d["value_x10"] : "0"));
            a.event.reading_timestamp_ms = to_u64(d, "reading_ts");
            if (d.count("trend_delta")) {
                a.event.trend = engine::TrendViolation{std::stod(d["trend_delta"]), std::stod(d["trend_span_s"])};
            }
            a.event.raised_at = e.time_ms;
            a.created_at = e.time_ms;
            a.last_notified_at = e.time_ms;
            std::istringstream roles(d["roles"]);
            for (std::string r; std::getline(roles, r, ',');) {
                if (auto role = notify::parse_role(r)) a.routed_roles.insert(*role);
            }
            alerts_[a.alert_id] = a;
            continue;
        }
        auto it = alerts_.find(e.alert_id);
        if (it == alerts_.end()) continue;
        Alert& a = it->second;
        auto d = parse_detail(e.detail);
        switch (e.event) {
            case AlertLogEvent::Renotified:
                a.renotify_count = static_cast<std::uint32_t>(to_u64(d, "round"));
                a.last_notified_at = e.time_ms;
                break;
            case AlertLogEvent::Exhausted: a.escalation_exhausted = true; break;
            case AlertLogEvent::Acked:
                a.state = AlertState::Acked;
                a.acked_by = d["by"];
                a.acked_role = notify::parse_role(d["role"]);
                a.acked_at = e.time_ms;
                break;
            case AlertLogEvent::Closed:
                a.state = AlertState::Closed;
                a.closed_at = e.time_ms;
                a.close_note = d.count("note") ? d["note"] : e.detail;
                break;
            default: break;
        }
    }
    for (const auto& [id, a] : alerts_) {
        if (a.state == AlertState::Closed) continue;
        live_[{a.event.patient_id, index_of(a.event.kind)}] = id;
        auto& ch = pipeline_for(a.event.patient_id).state.channel(a.event.kind);
        ch.active = true;
        ch.active_band = a.event.band;
    }
}

Gateway::Pipeline& Gateway::pipeline_for(PatientId patient) {
    std::lock_guard lock(pipelines_mu_);
    auto& slot = pipelines_[patient];
    if (!slot) slot = std::make_unique<Pipeline>();
    return *slot;
}

std::shared_ptr<const kb::KnowledgeBase> Gateway::current_kb() const {
    std::shared_lock lock(kb_mu_);
    return kb_;
}

IngestResult Gateway::ingest(std::span<const std::uint8_t> frame, TimestampMs /*arrival_ms*/) {
    counters_.frames_received.fetch_add(1, std::memory_order_relaxed);

    protocol::TelemetryPacket packet;
    try {
        packet = protocol::decode_packet(frame);
    } catch (const protocol::DecodeError& e) {
        counters_.frames_rejected.fetch_add(1, std::memory_order_relaxed);
        return IngestResult::rejected(std::string(protocol::to_string(e.code())));
    }

    auto patient = config_.patient_for(packet.node_id);
    if (!patient || !store_.has_patient(*patient)) {
        counters_.frames_rejected.fetch_add(1, std::memory_order_relaxed);
        return IngestResult::rejected(patient ? "UnknownPatient" : "UnmappedNode");
    }

    Pipeline& pipe = pipeline_for(*patient);
    std::lock_guard pipe_lock(pipe.mu);

    {
        std::lock_guard lock(tracker_mu_);
        auto verdict = tracker_.track(packet.node_id, packet.seq);
        if (!verdict.fresh()) {
            counters_.frames_duplicate.fetch_add(1, std::memory_order_relaxed);
            return IngestResult::duplicate();
        }
        counters_.sequence_gaps.fetch_add(verdict.gap, std::memory_order_relaxed);
    }

    auto kb = current_kb();
    IngestResult result = IngestResult::stored();
    std::vector<NotificationMessage> outbox;
    std::size_t stored = 0;

    for (const auto& s : packet.samples) {
        store::ReadingRecord r;
        r.patient_id = *patient;
        r.node_id = packet.node_id;
        r.seq = packet.seq;
        r.timestamp_ms = packet.timestamp_ms;
        r.kind = s.kind;
        r.value_x10 = s.value_x10;
        r.band = engine::classify(s.kind, s.value(), *kb);

        const TimestampMs now = clock_.now_ms();
        try {
            store_.append_reading(r, now);
        } catch (const store::DuplicateReading&) {
            // Seen before a restart; the tracker window starts empty.
            continue;
        }
        ++stored;
        counters_.readings_stored.fetch_add(1, std::memory_order_relaxed);
        bus_.publish(*patient, now, ReadingStored{r});

        std::optional<engine::EngineEvent> ev;
        try {
            ev = engine::update_state(pipe.state, *patient,
                                      {r.kind, r.timestamp_ms, r.value_x10, r.band}, *kb);
        } catch (const engine::OutOfOrderSample&) {
            counters_.samples_out_of_order.fetch_add(1, std::memory_order_relaxed);
            continue;
        }
        if (!ev) continue;
        if (auto* raised = std::get_if<engine::AlertEvent>(&*ev)) {
            engine::AlertEvent stamped = *raised;
            stamped.raised_at = now;
            result.raised_alerts.push_back(raise(stamped, now, outbox));
        } else {
            clear(std::get<engine::ClearEvent>(*ev), now);
        }
    }

    if (stored == 0) {
        counters_.frames_duplicate.fetch_add(1, std::memory_order_relaxed);
        return IngestResult::duplicate();
    }
    counters_.frames_stored.fetch_add(1, std::memory_order_relaxed);
    deliver(outbox);
    return result;
}

void Gateway::log(const Alert& a, AlertLogEvent event, TimestampMs at, std::string detail) {
    store_.append_alert_log({at, a.alert_id, event, a.event.patient_id, a.event.kind, a.event.band, std::move(detail)});
}

std::vector<NotificationMessage> Gateway::notify_round(Alert& a, std::uint32_t attempt, TimestampMs at) {
    std::vector<NotificationMessage> out;
    const std::string text = alert_text(a);
    for (Role role : a.routed_roles) {
        NotificationMessage m{a.alert_id, role, a.event.patient_id, a.event.kind, a.event.band, text, at, attempt};
        log(a, AlertLogEvent::Notified, at,
            "role=" + std::string(to_string(role)) + " attempt=" + std::to_string(attempt));
        out.push_back(std::move(m));
    }
    a.last_notified_at = at;
    return out;
}

// Caller holds the patient's pipeline lock.
std::uint64_t Gateway::raise(const engine::AlertEvent& ev, TimestampMs now, std::vector<NotificationMessage>& outbox) {
    std::lock_guard lock(alerts_mu_);
    Alert a;
    a.alert_id = next_alert_id_++;
    a.event = ev;
    a.created_at = now;
    a.routed_roles = config_.routing.roles_for(ev.band);
    log(a, AlertLogEvent::Raised, now, raised_detail(a));
    auto msgs = notify_round(a, 1, now);
    outbox.insert(outbox.end(), msgs.begin(), msgs.end());
    alerts_[a.alert_id] = a;
    live_[{ev.patient_id, index_of(ev.kind)}] = a.alert_id;
    counters_.alerts_raised.fetch_add(1, std::memory_order_relaxed);
    bus_.publish(ev.patient_id, now, AlertRaised{a});
    return a.alert_id;
}

void Gateway::clear(const engine::ClearEvent& ev, TimestampMs now) {
    std::lock_guard lock(alerts_mu_);
    auto it = live_.find({ev.patient_id, index_of(ev.kind)});
    if (it == live_.end()) return;
    Alert& a = alerts_.at(it->second);
    live_.erase(it);
    a.close_note = a.state == AlertState::Acked ? "cleared" : "cleared-unacked";
    a.state = AlertState::Closed;
    a.closed_at = now;
    log(a, AlertLogEvent::Closed, now, "note=" + a.close_note);
    counters_.alerts_closed.fetch_add(1, std::memory_order_relaxed);
    bus_.publish(a.event.patient_id, now, AlertCleared{a});
}

void Gateway::deliver(const std::vector<NotificationMessage>& messages) {
    if (messages.empty()) return;
    std::vector<std::pair<Role, std::shared_ptr<notify::NotificationSink>>> targets;
    {
        std::lock_guard lock(sinks_mu_);
        targets.assign(sinks_.begin(), sinks_.end());
    }
    for (const auto& m : messages) {
        counters_.notifications_sent.fetch_add(1, std::memory_order_relaxed);
        for (const auto& [role, sink] : targets) {
            if (role == m.role) sink->deliver(m);
        }
    }
}

std::vector<NotificationMessage> Gateway::dispatch_alert(std::uint64_t alert_id) {
    std::vector<NotificationMessage> msgs;
    {
        std::lock_guard lock(alerts_mu_);
        auto it = alerts_.find(alert_id);
        if (it == alerts_.end()) throw UnknownAlert(alert_id);
        if (it->second.state != AlertState::Open) return {};
        msgs = notify_round(it->second, 1, clock_.now_ms());
    }
    deliver(msgs);
    return msgs;
}

std::vector<NotificationMessage> Gateway::escalate(TimestampMs now) {
    std::vector<NotificationMessage> out;
    {
        std::lock_guard lock(alerts_mu_);
        const auto& policy = config_.escalation;
        for (auto& [id, a] : alerts_) {
            if (a.state != AlertState::Open || a.escalation_exhausted) continue;
            const TimestampMs interval = policy.interval_ms(a.event.band);
            while (interval > 0 && now >= a.last_notified_at + interval) {
                const TimestampMs due = a.last_notified_at + interval;
                if (a.renotify_count >= policy.max_renotifications) {
                    a.escalation_exhausted = true;
                    log(a, AlertLogEvent::Exhausted, due, "rounds=" + std::to_string(a.renotify_count));
                    counters_.alerts_exhausted.fetch_add(1, std::memory_order_relaxed);
                    break;
                }
                ++a.renotify_count;
                log(a, AlertLogEvent::Renotified, due, "round=" + std::to_string(a.renotify_count));
                counters_.alerts_escalated.fetch_add(1, std::memory_order_relaxed);
                auto msgs = notify_round(a, a.renotify_count + 1, due);
                out.insert(out.end(), msgs.begin(), msgs.end());
            }
        }
    }
    deliver(out);
    return out;
}

Alert Gateway::ack_alert(std::uint64_t alert_id, const std::string& user, Role role) {
    std::lock_guard lock(alerts_mu_);
    auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) throw UnknownAlert(alert_id);
    Alert& a = it->second;
    if (a.state != AlertState::Open) return a;
    const TimestampMs now = clock_.now_ms();
    a.state = AlertState::Acked;
    a.acked_by = user;
    a.acked_role = role;
    a.acked_at = now;
    log(a, AlertLogEvent::Acked, now, "by=" + user + " role=" + std::string(to_string(role)));
    counters_.alerts_acked.fetch_add(1, std::memory_order_relaxed);
    bus_.publish(a.event.patient_id, now, AlertAcked{a});
    return a;
}

std::vector<Alert> Gateway::alerts(std::optional<AlertState> state) const {
    std::lock_guard lock(alerts_mu_);
    std::vector<Alert> out;
    for (const auto& [id, a] : alerts_) {
        if (!state || a.state == *state) out.push_back(a);
    }
    return out;
}

std::optional<Alert> Gateway::alert(std::uint64_t alert_id) const {
    std::lock_guard lock(alerts_mu_);
    auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) return std::nullopt;
    return it->second;
}

kb::KnowledgeBase Gateway::knowledge_base() const { return *current_kb(); }

kb::KnowledgeBase Gateway::update_kb(const kb::KbProposal& proposal, const std::string& author) {
    std::unique_lock lock(kb_mu_);
    const TimestampMs now = clock_.now_ms();
    kb::KnowledgeBase next = kb::apply_kb_update(*kb_, proposal, author, now);
    store_.save_kb(next);
    kb_ = std::make_shared<const kb::KnowledgeBase>(next);
    bus_.publish(0, now, KbUpdated{next.revision, next.author, next.updated_at});
    return next;
}

void Gateway::add_sink(Role role, std::shared_ptr<notify::NotificationSink> sink) {
    std::lock_guard lock(sinks_mu_);
    sinks_.emplace(role, std::move(sink));
}

std::map<std::string, std::uint64_t> Gateway::metrics() const {
    auto get = [](const std::atomic<std::uint64_t>& v) { return v.load(std::memory_order_relaxed); };
    return {
        {"frames_received", get(counters_.frames_received)},
        {"frames_stored", get(counters_.frames_stored)},
        {"frames_duplicate", get(counters_.frames_duplicate)},
        {"frames_rejected", get(counters_.frames_rejected)},
        {"readings_stored", get(counters_.readings_stored)},
        {"samples_out_of_order", get(counters_.samples_out_of_order)},
        {"sequence_gaps", get(counters_.sequence_gaps)},
        {"alerts_raised", get(counters_.alerts_raised)},
        {"alerts_acked", get(counters_.alerts_acked)},
        {"alerts_escalated", get(counters_.alerts_escalated)},
        {"alerts_exhausted", get(counters_.alerts_exhausted)},
        {"alerts_closed", get(counters_.alerts_closed)},
        {"notifications_sent", get(counters_.notifications_sent)},
    };
}

void Gateway::flush_metrics() { store_.write_metrics(metrics()); }

}  // namespace ehc
