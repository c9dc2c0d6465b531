#include "ehc/notify.hpp"

#include "ehc/error.hpp"
#include "ehc/store.hpp"

#include <algorithm>
#include <cctype>

namespace ehc::notify {

std::string_view to_string(Role r) noexcept {
    return r == Role::Physician ? "Physician" : "Nurse";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "nurse") return Role::Nurse;
    if (t == "physician") return Role::Physician;
    return std::nullopt;
}

std::string format_message_line(const NotificationMessage& m) {
    return std::to_string(m.emitted_at) + '\t' + std::to_string(m.alert_id) + '\t' +
           std::string(to_string(m.role)) + '\t' + std::to_string(m.attempt) + '\t' +
           std::to_string(m.patient_id) + '\t' + std::string(to_string(m.kind)) + '\t' +
           std::string(to_string(m.band)) + '\t' + store::escape_field(m.text);
}

void ConsoleSink::deliver(const NotificationMessage& m) {
    std::lock_guard lock(mu_);
    out_ << "[notify " << to_string(m.role) << " #" << m.attempt << "] " << m.text << '\n';
    out_.flush();
}

FileSink::FileSink(const std::filesystem::path& path) : out_(path, std::ios::app | std::ios::binary) {
    if (!out_) throw Error("cannot open notification file " + path.string());
}

void FileSink::deliver(const NotificationMessage& m) {
    std::lock_guard lock(mu_);
    out_ << format_message_line(m) << '\n';
    out_.flush();
}

void MemorySink::deliver(const NotificationMessage& m) {
    std::lock_guard lock(mu_);
    messages_.push_back(m);
}

std::vector<NotificationMessage> MemorySink::messages() const {
    std::lock_guard lock(mu_);
    return messages_;
}

void MemorySink::clear() {
    std::lock_guard lock(mu_);
    messages_.clear();
}

}  // namespace ehc::notify
