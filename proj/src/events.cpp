#include "ehc/events.hpp"

#include "ehc/error.hpp"

#include <algorithm>
#include <cctype>

namespace ehc {

std::string_view to_string(AlertState s) noexcept {
    switch (s) {
        case AlertState::Open: return "Open";
        case AlertState::Acked: return "Acked";
        case AlertState::Closed: return "Closed";
    }
    return "?";
}

std::optional<AlertState> parse_alert_state(std::string_view text) noexcept {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "open") return AlertState::Open;
    if (t == "acked") return AlertState::Acked;
    if (t == "closed") return AlertState::Closed;
    return std::nullopt;
}

void RoutingRule::validate() const {
    std::vector<std::string> errs;
    if (warning.empty()) errs.push_back("routing: Warning must route to at least one role");
    for (auto r : warning) {
        if (!critical.count(r)) {
            errs.push_back("routing: Critical must include " + std::string(notify::to_string(r)) +
                           " because Warning does");
        }
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

std::string_view event_type_name(const StreamPayload& payload) noexcept {
    struct Visitor {
        std::string_view operator()(const ReadingStored&) const { return "ReadingStored"; }
        std::string_view operator()(const AlertRaised&) const { return "AlertRaised"; }
        std::string_view operator()(const AlertAcked&) const { return "AlertAcked"; }
        std::string_view operator()(const AlertCleared&) const { return "AlertCleared"; }
        std::string_view operator()(const KbUpdated&) const { return "KbUpdated"; }
    };
    return std::visit(Visitor{}, payload);
}

std::optional<StreamEvent> Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    StreamEvent ev = std::move(queue_.front());
    queue_.pop_front();
    return ev;
}

std::vector<StreamEvent> Subscription::drain() {
    std::lock_guard lock(mu_);
    std::vector<StreamEvent> out(std::make_move_iterator(queue_.begin()),
                                 std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

std::uint64_t Subscription::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

void Subscription::push(const StreamEvent& ev) {
    {
        std::lock_guard lock(mu_);
        if (queue_.size() >= capacity_) {
            queue_.pop_front();
            ++dropped_;
        }
        queue_.push_back(ev);
    }
    cv_.notify_one();
}

std::shared_ptr<Subscription> EventBus::subscribe(std::optional<notify::Role> role, std::size_t capacity) {
    auto sub = std::make_shared<Subscription>(role, capacity);
    std::lock_guard lock(mu_);
    subs_.push_back(sub);
    return sub;
}

void EventBus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mu_);
    subs_.erase(std::remove(subs_.begin(), subs_.end(), sub), subs_.end());
}

std::size_t EventBus::subscriber_count() const {
    std::lock_guard lock(mu_);
    return subs_.size();
}

namespace {

const Alert* alert_of(const StreamPayload& p) {
    if (auto* a = std::get_if<AlertRaised>(&p)) return &a->alert;
    if (auto* a = std::get_if<AlertAcked>(&p)) return &a->alert;
    if (auto* a = std::get_if<AlertCleared>(&p)) return &a->alert;
    return nullptr;
}

}  // namespace

void EventBus::publish(PatientId patient, TimestampMs committed_at, StreamPayload payload) {
    std::lock_guard lock(mu_);
    StreamEvent ev{next_sequence_++, committed_at, patient, std::move(payload)};
    const Alert* alert = alert_of(ev.payload);
    for (const auto& sub : subs_) {
        if (alert && sub->role() && !alert->routed_roles.count(*sub->role())) continue;
        sub->push(ev);
    }
}

}  // namespace ehc
