#pragma once

#include "ehc/vital.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::notify {

enum class Role : std::uint8_t { Nurse, Physician };

std::string_view to_string(Role r) noexcept;
/// Case-insensitive "nurse" / "physician".
std::optional<Role> parse_role(std::string_view text) noexcept;

struct NotificationMessage {
    std::uint64_t alert_id{0};
    Role role{Role::Nurse};
    PatientId patient_id{0};
    VitalKind kind{VitalKind::BodyTemperature};
    Band band{Band::Warning};
    std::string text;
    TimestampMs emitted_at{0};
    /// 1 for the initial dispatch, then one more per renotification round.
    std::uint32_t attempt{1};

    friend bool operator==(const NotificationMessage&, const NotificationMessage&) = default;
};

/// Delivery target standing in for pagers / phones. Implementations must
/// accept concurrent calls.
class NotificationSink {
public:
    virtual ~NotificationSink() = default;
    virtual void deliver(const NotificationMessage& message) = 0;
};

class ConsoleSink final : public NotificationSink {
public:
    explicit ConsoleSink(std::ostream& out) : out_(out) {}
    void deliver(const NotificationMessage& message) override;

private:
    std::mutex mu_;
    std::ostream& out_;
};

/// Appends one tab-separated line per message:
/// emitted_at, alert_id, role, attempt, patient_id, kind, band, text.
class FileSink final : public NotificationSink {
public:
    explicit FileSink(const std::filesystem::path& path);
    void deliver(const NotificationMessage& message) override;

private:
    std::mutex mu_;
    std::ofstream out_;
};

class MemorySink final : public NotificationSink {
public:
    void deliver(const NotificationMessage& message) override;
    std::vector<NotificationMessage> messages() const;
    void clear();

private:
    mutable std::mutex mu_;
    std::vector<NotificationMessage> messages_;
};

std::string format_message_line(const NotificationMessage& m);

}  // namespace ehc::notify
