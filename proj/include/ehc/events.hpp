#pragma once

#include "ehc/alert.hpp"
#include "ehc/notify.hpp"
#include "ehc/store.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ehc {

struct ReadingStored {
    store::ReadingRecord reading;
};
struct AlertRaised {
    Alert alert;
};
struct AlertAcked {
    Alert alert;
};
struct AlertCleared {
    Alert alert;
};
struct KbUpdated {
    std::uint64_t revision{0};
    std::string author;
    TimestampMs updated_at{0};
};

using StreamPayload = std::variant<ReadingStored, AlertRaised, AlertAcked, AlertCleared, KbUpdated>;

std::string_view event_type_name(const StreamPayload& payload) noexcept;

struct StreamEvent {
    /// Global commit order, starting at 1.
    std::uint64_t sequence{0};
    TimestampMs committed_at{0};
    /// 0 for events not tied to a patient (KbUpdated).
    PatientId patient_id{0};
    StreamPayload payload;
};

/// One subscriber's queue. Bounded: when a consumer falls behind by more than
/// `capacity` events, the oldest are dropped and counted.
class Subscription {
public:
    Subscription(std::optional<notify::Role> role, std::size_t capacity)
        : role_(role), capacity_(capacity) {}

    std::optional<StreamEvent> next(std::chrono::milliseconds timeout);
    std::vector<StreamEvent> drain();
    std::uint64_t dropped() const;
    const std::optional<notify::Role>& role() const noexcept { return role_; }

private:
    friend class EventBus;
    void push(const StreamEvent& ev);

    std::optional<notify::Role> role_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<StreamEvent> queue_;
    std::uint64_t dropped_{0};
};

/// Fan-out of committed events to live subscribers. Publishing is
/// serialized, so every subscriber sees events in commit order. Alert events
/// only reach subscribers whose role the alert is routed to; subscribers
/// without a role see everything.
class EventBus {
public:
    std::shared_ptr<Subscription> subscribe(std::optional<notify::Role> role = std::nullopt,
                                            std::size_t capacity = 65536);
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    void publish(PatientId patient, TimestampMs committed_at, StreamPayload payload);
    std::size_t subscriber_count() const;

private:
    mutable std::mutex mu_;
    std::uint64_t next_sequence_{1};
    std::vector<std::shared_ptr<Subscription>> subs_;
};

}  // namespace ehc
