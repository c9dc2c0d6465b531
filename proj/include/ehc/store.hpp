#pragma once

#include "ehc/dates.hpp"
#include "ehc/error.hpp"
#include "ehc/knowledge_base.hpp"
#include "ehc/vital.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::store {

struct EmergencyContact {
    std::string name;
    std::string phone;
    std::string address;
    std::string relationship;

    friend bool operator==(const EmergencyContact&, const EmergencyContact&) = default;
};

struct PatientRecord {
    PatientId id{0};
    std::string last_name;
    std::string first_name;
    std::string address;
    std::string mobile_phone;
    std::string home_phone;
    std::string social_insurance_number;  // stored verbatim
    std::string date_of_birth;            // ISO-8601 date or empty
    std::optional<double> height_ft;
    std::optional<double> weight_lb;
    std::string email;
    EmergencyContact emergency_contact;

    friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct ReadingRecord {
    PatientId patient_id{0};
    NodeId node_id{0};
    std::uint16_t seq{0};
    TimestampMs timestamp_ms{0};
    VitalKind kind{VitalKind::BodyTemperature};
    std::int16_t value_x10{0};
    Band band{Band::Normal};

    friend bool operator==(const ReadingRecord&, const ReadingRecord&) = default;
};

/// Identifies one stored reading. The timestamp separates sequence-number
/// epochs after a node's 16-bit counter wraps.
struct ReadingRef {
    NodeId node_id{0};
    std::uint16_t seq{0};
    VitalKind kind{VitalKind::BodyTemperature};
    TimestampMs timestamp_ms{0};

    auto operator<=>(const ReadingRef&) const = default;
    static ReadingRef of(const ReadingRecord& r) { return {r.node_id, r.seq, r.kind, r.timestamp_ms}; }
};

struct NoteRecord {
    PatientId patient_id{0};
    TimestampMs created_at{0};
    std::string text;
    std::optional<ReadingRef> reading;

    friend bool operator==(const NoteRecord&, const NoteRecord&) = default;
};

struct PrescriptionRecord {
    PatientId patient_id{0};
    std::string physician_registration_number;
    std::string text;
    TimestampMs created_at{0};

    friend bool operator==(const PrescriptionRecord&, const PrescriptionRecord&) = default;
};

enum class EntryCategory { History, Medication, Condition };

std::string_view to_string(EntryCategory c) noexcept;

/// Free-form clinical entry under the history / medications / conditions tabs.
struct ClinicalEntry {
    PatientId patient_id{0};
    EntryCategory category{EntryCategory::History};
    TimestampMs created_at{0};
    std::string text;

    friend bool operator==(const ClinicalEntry&, const ClinicalEntry&) = default;
};

enum class BandFilter { All, Normal, Abnormal };

std::optional<BandFilter> parse_band_filter(std::string_view text) noexcept;

struct ReadingQuery {
    std::optional<TimestampMs> from;  // inclusive
    std::optional<TimestampMs> to;    // inclusive
    std::optional<VitalKind> kind;
    BandFilter band{BandFilter::All};
};

struct AppendResult {
    ReadingRecord reading;
    std::optional<NoteRecord> note;
};

enum class AlertLogEvent { Raised, Notified, Renotified, Exhausted, Acked, Closed };

std::string_view to_string(AlertLogEvent e) noexcept;
std::optional<AlertLogEvent> parse_alert_log_event(std::string_view text) noexcept;

/// One line of alerts.log: an alert lifecycle transition or notification.
struct AlertLogEntry {
    TimestampMs time_ms{0};
    std::uint64_t alert_id{0};
    AlertLogEvent event{AlertLogEvent::Raised};
    PatientId patient_id{0};
    VitalKind kind{VitalKind::BodyTemperature};
    Band band{Band::Normal};
    std::string detail;

    friend bool operator==(const AlertLogEntry&, const AlertLogEntry&) = default;
};

class UnknownPatient : public NotFoundError {
public:
    explicit UnknownPatient(PatientId id);
};

class DuplicateReading : public ConflictError {
public:
    using ConflictError::ConflictError;
};

/// Throws ValidationError when names are empty or the birth date is not ISO.
void validate_patient(const PatientRecord& record);

/// patients.tsv text. With `order`, slash dates are normalized on the way
/// in; without it only ISO dates are accepted.
std::vector<PatientRecord> parse_patients_tsv(std::string_view text,
                                              std::optional<DateOrder> order = std::nullopt);
std::string format_patients_tsv(const std::vector<PatientRecord>& records);

// Tab-separated field escaping used by every store file.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);
std::vector<std::string> split_tsv(std::string_view line);

std::string format_reading_line(const ReadingRecord& r);
ReadingRecord parse_reading_line(std::string_view line, PatientId patient);
std::string format_alert_line(const AlertLogEntry& e);
AlertLogEntry parse_alert_line(std::string_view line);

/// Directory-backed patient database:
///
///   patients.tsv              snapshot, rewritten atomically on change
///   kb.txt                    knowledge base
///   readings/<patient>.log    append-only readings
///   notes.log                 abnormal-reading and free-text notes
///   prescriptions.log
///   history.log, medications.log, conditions.log
///   alerts.log                alert lifecycle
///   metrics.tsv               gateway counters snapshot
///
/// Reads run concurrently; writes are serialized per patient. All data is
/// loaded into memory on open.
class PatientStore {
public:
    /// Opens (creating when `create` is set) the store directory. A torn
    /// final line in any log is truncated; an abnormal reading whose note
    /// was lost is given its note again.
    static std::unique_ptr<PatientStore> open(const std::filesystem::path& dir, bool create = true);

    ~PatientStore();
    PatientStore(const PatientStore&) = delete;
    PatientStore& operator=(const PatientStore&) = delete;

    const std::filesystem::path& path() const noexcept;

    PatientRecord upsert_patient(const PatientRecord& record);
    std::optional<PatientRecord> get_patient(PatientId id) const;
    bool has_patient(PatientId id) const;
    /// `name`: case-insensitive substring of "first last" or "last first".
    /// Both filters are conjunctive; results ordered by id.
    std::vector<PatientRecord> find_patients(std::optional<std::string_view> name,
                                             std::optional<PatientId> id) const;

    /// Stores the reading and, when its band is abnormal, a linked note in
    /// the same critical section. Throws UnknownPatient, DuplicateReading.
    AppendResult append_reading(const ReadingRecord& reading, TimestampMs now);
    std::vector<ReadingRecord> query_readings(PatientId id, const ReadingQuery& query = {}) const;
    std::optional<TimestampMs> last_update(PatientId id) const;
    std::size_t reading_count() const;

    std::vector<NoteRecord> notes(PatientId id) const;
    NoteRecord add_note(PatientId id, std::string text, TimestampMs now);

    PrescriptionRecord add_prescription(PatientId id, std::string registration_number,
                                        std::string text, TimestampMs now);
    std::vector<PrescriptionRecord> prescriptions(PatientId id) const;

    ClinicalEntry add_entry(PatientId id, EntryCategory category, std::string text, TimestampMs now);
    std::vector<ClinicalEntry> entries(PatientId id, EntryCategory category) const;

    void append_alert_log(const AlertLogEntry& entry);
    std::vector<AlertLogEntry> alert_log() const;

    std::optional<kb::KnowledgeBase> load_kb() const;
    void save_kb(const kb::KnowledgeBase& kb);

    void write_metrics(const std::map<std::string, std::uint64_t>& counters);
    std::map<std::string, std::uint64_t> read_metrics() const;

private:
    struct Impl;
    explicit PatientStore(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace ehc::store
