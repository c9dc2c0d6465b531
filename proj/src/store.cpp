#include "ehc/store.hpp"

#include "ehc/kvtext.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <sstream>

namespace ehc::store {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kPatientColumns[] = {
    "id",           "last_name",  "first_name", "address",
    "mobile_phone", "home_phone", "social_insurance_number",
    "date_of_birth", "height_ft", "weight_lb",  "email",
    "emergency_contact_name", "emergency_contact_phone", "emergency_contact_address",
    "emergency_contact_relationship"};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error("bad " + std::string(what) + " field '" + std::string(text) + "'");
    }
    return v;
}

VitalKind parse_kind_field(std::string_view text) {
    auto k = parse_vital_kind(text);
    if (!k) throw Error("bad kind field '" + std::string(text) + "'");
    return *k;
}

Band parse_band_field(std::string_view text) {
    auto b = parse_band(text);
    if (!b) throw Error("bad band field '" + std::string(text) + "'");
    return *b;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? kv::format_number(*v) : std::string{};
}

std::optional<double> parse_optional(std::string_view text) {
    if (text.empty()) return std::nullopt;
    return parse_number<double>(text, "numeric");
}

std::string ref_text(const std::optional<ReadingRef>& ref) {
    if (!ref) return "-";
    return std::to_string(ref->node_id) + ":" + std::to_string(ref->seq) + ":" +
           std::string(to_string(ref->kind)) + ":" + std::to_string(ref->timestamp_ms);
}

std::optional<ReadingRef> parse_ref(std::string_view text) {
    if (text == "-") return std::nullopt;
    std::vector<std::string_view> parts;
    while (true) {
        auto p = text.find(':');
        parts.push_back(text.substr(0, p));
        if (p == std::string_view::npos) break;
        text.remove_prefix(p + 1);
    }
    if (parts.size() != 4) throw Error("bad reading reference");
    return ReadingRef{parse_number<NodeId>(parts[0], "node"), parse_number<std::uint16_t>(parts[1], "seq"),
                      parse_kind_field(parts[2]), parse_number<TimestampMs>(parts[3], "timestamp")};
}

std::string abnormal_note_text(const ReadingRecord& r) {
    return "Abnormal " + std::string(to_string(r.kind)) + " reading " + kv::format_number(from_x10(r.value_x10)) +
           " " + std::string(unit_of(r.kind)) + " (" + std::string(to_string(r.band)) + ")";
}

/// Complete lines of a log file. A final line without its newline is a torn
/// write: it is dropped and the file truncated back to the last newline.
std::vector<std::string> load_lines(const fs::path& path) {
    std::vector<std::string> lines;
    if (!fs::exists(path)) return lines;
    std::string content = read_file(path);
    const auto last_nl = content.rfind('\n');
    const std::size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (complete != content.size()) {
        fs::resize_file(path, complete);
        content.resize(complete);
    }
    std::size_t pos = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        lines.emplace_back(content, pos, nl - pos);
        pos = nl + 1;
    }
    return lines;
}

class LogFile {
public:
    explicit LogFile(fs::path path) : path_(std::move(path)) {}

    void append(const std::string& line) {
        std::lock_guard lock(mu_);
        if (!out_.is_open()) {
            out_.open(path_, std::ios::app | std::ios::binary);
            if (!out_) throw Error("cannot open " + path_.string() + " for append");
        }
        out_ << line << '\n';
        out_.flush();
        if (!out_) throw Error("write failed on " + path_.string());
    }

private:
    fs::path path_;
    std::mutex mu_;
    std::ofstream out_;
};

std::string category_file(EntryCategory c) {
    switch (c) {
        case EntryCategory::History: return "history.log";
        case EntryCategory::Medication: return "medications.log";
        case EntryCategory::Condition: return "conditions.log";
    }
    return "history.log";
}

constexpr EntryCategory kCategories[] = {EntryCategory::History, EntryCategory::Medication,
                                         EntryCategory::Condition};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string_view to_string(EntryCategory c) noexcept {
    switch (c) {
        case EntryCategory::History: return "history";
        case EntryCategory::Medication: return "medications";
        case EntryCategory::Condition: return "conditions";
    }
    return "?";
}

std::optional<BandFilter> parse_band_filter(std::string_view text) noexcept {
    const auto t = lower(text);
    if (t.empty() || t == "all") return BandFilter::All;
    if (t == "normal") return BandFilter::Normal;
    if (t == "abnormal") return BandFilter::Abnormal;
    return std::nullopt;
}

std::string_view to_string(AlertLogEvent e) noexcept {
    switch (e) {
        case AlertLogEvent::Raised: return "Raised";
        case AlertLogEvent::Notified: return "Notified";
        case AlertLogEvent::Renotified: return "Renotified";
        case AlertLogEvent::Exhausted: return "Exhausted";
        case AlertLogEvent::Acked: return "Acked";
        case AlertLogEvent::Closed: return "Closed";
    }
    return "?";
}

std::optional<AlertLogEvent> parse_alert_log_event(std::string_view text) noexcept {
    for (auto e : {AlertLogEvent::Raised, AlertLogEvent::Notified, AlertLogEvent::Renotified,
                   AlertLogEvent::Exhausted, AlertLogEvent::Acked, AlertLogEvent::Closed}) {
        if (text == to_string(e)) return e;
    }
    return std::nullopt;
}

UnknownPatient::UnknownPatient(PatientId id) : NotFoundError("unknown patient " + std::to_string(id)) {}

std::string escape_field(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\' || i + 1 == text.size()) {
            out += text[i];
            continue;
        }
        switch (text[++i]) {
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            default: out += text[i];
        }
    }
    return out;
}

std::vector<std::string> split_tsv(std::string_view line) {
    std::vector<std::string> out;
    while (true) {
        auto p = line.find('\t');
        out.push_back(unescape_field(line.substr(0, p)));
        if (p == std::string_view::npos) break;
        line.remove_prefix(p + 1);
    }
    return out;
}

void validate_patient(const PatientRecord& r) {
    std::vector<std::string> errs;
    if (blank(r.last_name)) errs.push_back("last_name must be nonempty");
    if (blank(r.first_name)) errs.push_back("first_name must be nonempty");
    if (!r.date_of_birth.empty() && !is_iso_date(r.date_of_birth)) {
        errs.push_back("date_of_birth must be an ISO date (YYYY-MM-DD), got '" + r.date_of_birth + "'");
    }
    if (r.height_ft && !(*r.height_ft > 0)) errs.push_back("height_ft must be > 0");
    if (r.weight_lb && !(*r.weight_lb > 0)) errs.push_back("weight_lb must be > 0");
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

std::vector<PatientRecord> parse_patients_tsv(std::string_view text, std::optional<DateOrder> order) {
    std::vector<PatientRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tsv(line);
        if (!header_seen) {
            header_seen = true;
            bool ok = fields.size() == std::size(kPatientColumns);
            for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == kPatientColumns[i];
            if (!ok) throw ValidationError("patients file: unexpected header at line " + std::to_string(line_no));
            continue;
        }
        if (fields.size() != std::size(kPatientColumns)) {
            throw ValidationError("patients file line " + std::to_string(line_no) + ": expected " +
                        std::to_string(std::size(kPatientColumns)) + " fields, got " +
                        std::to_string(fields.size()));
        }
        try {
            PatientRecord r;
            r.id = parse_number<PatientId>(fields[0], "id");
            r.last_name = fields[1];
            r.first_name = fields[2];
            r.address = fields[3];
            r.mobile_phone = fields[4];
            r.home_phone = fields[5];
            r.social_insurance_number = fields[6];
            r.date_of_birth = fields[7].empty() || !order ? fields[7] : normalize_date(fields[7], *order);
            r.height_ft = parse_optional(fields[8]);
            r.weight_lb = parse_optional(fields[9]);
            r.email = fields[10];
            r.emergency_contact = {fields[11], fields[12], fields[13], fields[14]};
            validate_patient(r);
            out.push_back(std::move(r));
        } catch (const Error& e) {
            throw ValidationError("patients file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen) throw ValidationError("patients file: missing header");
    return out;
}

std::string format_patients_tsv(const std::vector<PatientRecord>& records) {
    std::string out;
    for (std::size_t i = 0; i < std::size(kPatientColumns); ++i) {
        if (i) out += '\t';
        out += kPatientColumns[i];
    }
    out += '\n';
    for (const auto& r : records) {
        const std::string fields[] = {std::to_string(r.id), r.last_name, r.first_name, r.address,
                                      r.mobile_phone, r.home_phone, r.social_insurance_number,
                                      r.date_of_birth, format_optional(r.height_ft),
                                      format_optional(r.weight_lb), r.email, r.emergency_contact.name,
                                      r.emergency_contact.phone, r.emergency_contact.address,
                                      r.emergency_contact.relationship};
        for (std::size_t i = 0; i < std::size(fields); ++i) {
            if (i) out += '\t';
            out += escape_field(fields[i]);
        }
        out += '\n';
    }
    return out;
}

std::string format_reading_line(const ReadingRecord& r) {
    return std::to_string(r.timestamp_ms) + '\t' + std::to_string(r.node_id) + '\t' + std::to_string(r.seq) +
           '\t' + std::string(to_string(r.kind)) + '\t' + std::to_string(r.value_x10) + '\t' +
           std::string(to_string(r.band));
}

ReadingRecord parse_reading_line(std::string_view line, PatientId patient) {
    const auto f = split_tsv(line);
    if (f.size() != 6) throw Error("reading line: expected 6 fields");
    ReadingRecord r;
    r.patient_id = patient;
    r.timestamp_ms = parse_number<TimestampMs>(f[0], "timestamp_ms");
    r.node_id = parse_number<NodeId>(f[1], "node_id");
    r.seq = parse_number<std::uint16_t>(f[2], "seq");
    r.kind = parse_kind_field(f[3]);
    r.value_x10 = parse_number<std::int16_t>(f[4], "value_x10");
    r.band = parse_band_field(f[5]);
    return r;
}

std::string format_alert_line(const AlertLogEntry& e) {
    return std::to_string(e.time_ms) + '\t' + std::to_string(e.alert_id) + '\t' +
           std::string(to_string(e.event)) + '\t' + std::to_string(e.patient_id) + '\t' +
           std::string(to_string(e.kind)) + '\t' + std::string(to_string(e.band)) + '\t' +
           escape_field(e.detail);
}

AlertLogEntry parse_alert_line(std::string_view line) {
    const auto f = split_tsv(line);
    if (f.size() != 7) throw Error("alert line: expected 7 fields");
    AlertLogEntry e;
    e.time_ms = parse_number<TimestampMs>(f[0], "time_ms");
    e.alert_id = parse_number<std::uint64_t>(f[1], "alert_id");
    auto ev = parse_alert_log_event(f[2]);
    if (!ev) throw Error("bad alert event '" + f[2] + "'");
    e.event = *ev;
    e.patient_id = parse_number<PatientId>(f[3], "patient_id");
    e.kind = parse_kind_field(f[4]);
    e.band = parse_band_field(f[5]);
    e.detail = f[6];
    return e;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("write failed on " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------

struct PatientData {
    explicit PatientData(PatientRecord r, fs::path reading_log)
        : record(std::move(r)), log(std::move(reading_log)) {}

    mutable std::shared_mutex mu;
    PatientRecord record;
    std::vector<ReadingRecord> readings;
    std::set<ReadingRef> keys;
    std::vector<NoteRecord> notes;
    std::vector<PrescriptionRecord> prescriptions;
    std::vector<ClinicalEntry> entries;
    LogFile log;
};

struct PatientStore::Impl {
    fs::path dir;
    mutable std::shared_mutex patients_mu;
    std::map<PatientId, std::unique_ptr<PatientData>> patients;

    LogFile notes_log;
    LogFile prescriptions_log;
    std::map<EntryCategory, std::unique_ptr<LogFile>> entry_logs;
    LogFile alerts_log;

    mutable std::mutex alerts_mu;
    std::vector<AlertLogEntry> alerts;

    std::mutex snapshot_mu;

    explicit Impl(fs::path d)
        : dir(std::move(d)),
          notes_log(dir / "notes.log"),
          prescriptions_log(dir / "prescriptions.log"),
          alerts_log(dir / "alerts.log") {
        for (auto c : kCategories) entry_logs[c] = std::make_unique<LogFile>(dir / category_file(c));
    }

    fs::path reading_path(PatientId id) const { return dir / "readings" / (std::to_string(id) + ".log"); }

    PatientData& data(PatientId id) const {
        auto it = patients.find(id);
        if (it == patients.end()) throw UnknownPatient(id);
        return *it->second;
    }

    void write_snapshot() {
        std::vector<PatientRecord> records;
        records.reserve(patients.size());
        for (const auto& [id, p] : patients) {
            std::shared_lock lock(p->mu);
            records.push_back(p->record);
        }
        write_file_atomic(dir / "patients.tsv", format_patients_tsv(records));
    }
};

PatientStore::PatientStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
PatientStore::~PatientStore() = default;

const fs::path& PatientStore::path() const noexcept { return impl_->dir; }

std::unique_ptr<PatientStore> PatientStore::open(const fs::path& dir, bool create) {
    if (!fs::exists(dir)) {
        if (!create) throw Error("store directory " + dir.string() + " does not exist");
        fs::create_directories(dir);
    }
    if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
    fs::create_directories(dir / "readings");

    auto impl = std::make_unique<Impl>(dir);
    auto& m = *impl;

    if (fs::exists(dir / "patients.tsv")) {
        for (auto& r : parse_patients_tsv(read_file(dir / "patients.tsv"))) {
            const auto id = r.id;
            m.patients.emplace(id, std::make_unique<PatientData>(std::move(r), m.reading_path(id)));
        }
    }

    for (const auto& entry : fs::directory_iterator(dir / "readings")) {
        if (entry.path().extension() != ".log") continue;
        const auto stem = entry.path().stem().string();
        const auto id = parse_number<PatientId>(stem, "patient file");
        auto& p = m.data(id);
        for (const auto& line : load_lines(entry.path())) {
            auto r = parse_reading_line(line, id);
            p.keys.insert(ReadingRef::of(r));
            p.readings.push_back(r);
        }
    }

    for (const auto& line : load_lines(dir / "notes.log")) {
        const auto f = split_tsv(line);
        if (f.size() != 4) throw Error("notes.log: expected 4 fields");
        NoteRecord n{parse_number<PatientId>(f[0], "patient_id"), parse_number<TimestampMs>(f[1], "created_at"),
                     f[3], parse_ref(f[2])};
        m.data(n.patient_id).notes.push_back(std::move(n));
    }
    for (const auto& line : load_lines(dir / "prescriptions.log")) {
        const auto f = split_tsv(line);
        if (f.size() != 4) throw Error("prescriptions.log: expected 4 fields");
        PrescriptionRecord pr{parse_number<PatientId>(f[0], "patient_id"), f[2], f[3],
                              parse_number<TimestampMs>(f[1], "created_at")};
        m.data(pr.patient_id).prescriptions.push_back(std::move(pr));
    }
    for (auto c : kCategories) {
        for (const auto& line : load_lines(dir / category_file(c))) {
            const auto f = split_tsv(line);
            if (f.size() != 3) throw Error(category_file(c) + ": expected 3 fields");
            ClinicalEntry e{parse_number<PatientId>(f[0], "patient_id"), c,
                            parse_number<TimestampMs>(f[1], "created_at"), f[2]};
            m.data(e.patient_id).entries.push_back(std::move(e));
        }
    }
    for (const auto& line : load_lines(dir / "alerts.log")) m.alerts.push_back(parse_alert_line(line));

    // Re-link abnormal readings whose note did not make it to disk.
    for (auto& [id, p] : m.patients) {
        std::set<ReadingRef> linked;
        for (const auto& n : p->notes) {
            if (n.reading) linked.insert(*n.reading);
        }
        for (const auto& r : p->readings) {
            if (!is_abnormal(r.band) || linked.count(ReadingRef::of(r))) continue;
            NoteRecord n{id, r.timestamp_ms, abnormal_note_text(r), ReadingRef::of(r)};
            m.notes_log.append(std::to_string(id) + '\t' + std::to_string(n.created_at) + '\t' +
                               ref_text(n.reading) + '\t' + escape_field(n.text));
            p->notes.push_back(std::move(n));
        }
    }

    return std::unique_ptr<PatientStore>(new PatientStore(std::move(impl)));
}

PatientRecord PatientStore::upsert_patient(const PatientRecord& record) {
    validate_patient(record);
    std::scoped_lock snap(impl_->snapshot_mu);
    {
        std::unique_lock lock(impl_->patients_mu);
        auto it = impl_->patients.find(record.id);
        if (it == impl_->patients.end()) {
            impl_->patients.emplace(record.id,
                                    std::make_unique<PatientData>(record, impl_->reading_path(record.id)));
        } else {
            std::unique_lock plock(it->second->mu);
            it->second->record = record;
        }
    }
    std::shared_lock lock(impl_->patients_mu);
    impl_->write_snapshot();
    return record;
}

std::optional<PatientRecord> PatientStore::get_patient(PatientId id) const {
    std::shared_lock lock(impl_->patients_mu);
    auto it = impl_->patients.find(id);
    if (it == impl_->patients.end()) return std::nullopt;
    std::shared_lock plock(it->second->mu);
    return it->second->record;
}

bool PatientStore::has_patient(PatientId id) const {
    std::shared_lock lock(impl_->patients_mu);
    return impl_->patients.count(id) != 0;
}

std::vector<PatientRecord> PatientStore::find_patients(std::optional<std::string_view> name,
                                                       std::optional<PatientId> id) const {
    const std::string needle = name ? lower(*name) : std::string{};
    std::vector<PatientRecord> out;
    std::shared_lock lock(impl_->patients_mu);
    for (const auto& [pid, p] : impl_->patients) {
        if (id && pid != *id) continue;
        std::shared_lock plock(p->mu);
        if (!needle.empty()) {
            const auto first_last = lower(p->record.first_name + " " + p->record.last_name);
            const auto last_first = lower(p->record.last_name + " " + p->record.first_name);
            if (first_last.find(needle) == std::string::npos &&
                last_first.find(needle) == std::string::npos) {
                continue;
            }
        }
        out.push_back(p->record);
    }
    return out;
}

AppendResult PatientStore::append_reading(const ReadingRecord& reading, TimestampMs now) {
    std::shared_lock lock(impl_->patients_mu);
    auto& p = impl_->data(reading.patient_id);
    std::unique_lock plock(p.mu);

    const auto ref = ReadingRef::of(reading);
    if (p.keys.count(ref)) {
        throw DuplicateReading("duplicate reading node " + std::to_string(reading.node_id) + " seq " +
                               std::to_string(reading.seq) + " " + std::string(to_string(reading.kind)));
    }
    p.log.append(format_reading_line(reading));
    p.keys.insert(ref);
    p.readings.push_back(reading);

    AppendResult result{reading, std::nullopt};
    if (is_abnormal(reading.band)) {
        NoteRecord n{reading.patient_id, now, abnormal_note_text(reading), ref};
        impl_->notes_log.append(std::to_string(n.patient_id) + '\t' + std::to_string(n.created_at) + '\t' +
                                ref_text(n.reading) + '\t' + escape_field(n.text));
        p.notes.push_back(n);
        result.note = std::move(n);
    }
    return result;
}

std::vector<ReadingRecord> PatientStore::query_readings(PatientId id, const ReadingQuery& q) const {
    std::shared_lock lock(impl_->patients_mu);
    const auto& p = impl_->data(id);
    std::shared_lock plock(p.mu);
    std::vector<ReadingRecord> out;
    for (const auto& r : p.readings) {
        if (q.from && r.timestamp_ms < *q.from) continue;
        if (q.to && r.timestamp_ms > *q.to) continue;
        if (q.kind && r.kind != *q.kind) continue;
        if (q.band == BandFilter::Normal && r.band != Band::Normal) continue;
        if (q.band == BandFilter::Abnormal && r.band == Band::Normal) continue;
        out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const ReadingRecord& a, const ReadingRecord& b) {
        return a.timestamp_ms < b.timestamp_ms;
    });
    return out;
}

std::optional<TimestampMs> PatientStore::last_update(PatientId id) const {
    std::shared_lock lock(impl_->patients_mu);
    const auto& p = impl_->data(id);
    std::shared_lock plock(p.mu);
    std::optional<TimestampMs> latest;
    for (const auto& r : p.readings) {
        if (!latest || r.timestamp_ms > *latest) latest = r.timestamp_ms;
    }
    return latest;
}

std::size_t PatientStore::reading_count() const {
    std::shared_lock lock(impl_->patients_mu);
    std::size_t n = 0;
    for (const auto& [id, p] : impl_->patients) {
        std::shared_lock plock(p->mu);
        n += p->readings.size();
    }
    return n;
}

std::vector<NoteRecord> PatientStore::notes(PatientId id) const {
    std::shared_lock lock(impl_->patients_mu);
    const auto& p = impl_->data(id);
    std::shared_lock plock(p.mu);
    return p.notes;
}

NoteRecord PatientStore::add_note(PatientId id, std::string text, TimestampMs now) {
    if (blank(text)) throw ValidationError("note text must be nonempty");
    std::shared_lock lock(impl_->patients_mu);
    auto& p = impl_->data(id);
    std::unique_lock plock(p.mu);
    NoteRecord n{id, now, std::move(text), std::nullopt};
    impl_->notes_log.append(std::to_string(id) + '\t' + std::to_string(now) + '\t' + ref_text(n.reading) +
                            '\t' + escape_field(n.text));
    p.notes.push_back(n);
    return n;
}

PrescriptionRecord PatientStore::add_prescription(PatientId id, std::string registration_number,
                                                  std::string text, TimestampMs now) {
    std::shared_lock lock(impl_->patients_mu);
    auto& p = impl_->data(id);
    std::vector<std::string> errs;
    if (blank(text)) errs.push_back("prescription text must be nonempty");
    if (blank(registration_number)) errs.push_back("physician_registration_number must be nonempty");
    if (!errs.empty()) throw ValidationError(std::move(errs));

    std::unique_lock plock(p.mu);
    PrescriptionRecord pr{id, std::move(registration_number), std::move(text), now};
    impl_->prescriptions_log.append(std::to_string(id) + '\t' + std::to_string(now) + '\t' +
                                    escape_field(pr.physician_registration_number) + '\t' +
                                    escape_field(pr.text));
    p.prescriptions.push_back(pr);
    return pr;
}

std::vector<PrescriptionRecord> PatientStore::prescriptions(PatientId id) const {
    std::shared_lock lock(impl_->patients_mu);
    const auto& p = impl_->data(id);
    std::shared_lock plock(p.mu);
    return p.prescriptions;
}

ClinicalEntry PatientStore::add_entry(PatientId id, EntryCategory category, std::string text,
                                      TimestampMs now) {
    std::shared_lock lock(impl_->patients_mu);
    auto& p = impl_->data(id);
    if (blank(text)) throw ValidationError(std::string(to_string(category)) + " text must be nonempty");
    std::unique_lock plock(p.mu);
    ClinicalEntry e{id, category, now, std::move(text)};
    impl_->entry_logs.at(category)->append(std::to_string(id) + '\t' + std::to_string(now) + '\t' +
                                           escape_field(e.text));
    p.entries.push_back(e);
    return e;
}

std::vector<ClinicalEntry> PatientStore::entries(PatientId id, EntryCategory category) const {
    std::shared_lock lock(impl_->patients_mu);
    const auto& p = impl_->data(id);
    std::shared_lock plock(p.mu);
    std::vector<ClinicalEntry> out;
    for (const auto& e : p.entries) {
        if (e.category == category) out.push_back(e);
    }
    return out;
}

void PatientStore::append_alert_log(const AlertLogEntry& entry) {
    std::lock_guard lock(impl_->alerts_mu);
    impl_->alerts_log.append(format_alert_line(entry));
    impl_->alerts.push_back(entry);
}

std::vector<AlertLogEntry> PatientStore::alert_log() const {
    std::lock_guard lock(impl_->alerts_mu);
    return impl_->alerts;
}

std::optional<kb::KnowledgeBase> PatientStore::load_kb() const {
    const auto path = impl_->dir / "kb.txt";
    if (!fs::exists(path)) return std::nullopt;
    return kb::load_kb(read_file(path));
}

void PatientStore::save_kb(const kb::KnowledgeBase& kb) {
    write_file_atomic(impl_->dir / "kb.txt", kb::save_kb(kb));
}

void PatientStore::write_metrics(const std::map<std::string, std::uint64_t>& counters) {
    std::string out;
    for (const auto& [k, v] : counters) out += k + '\t' + std::to_string(v) + '\n';
    write_file_atomic(impl_->dir / "metrics.tsv", out);
}

std::map<std::string, std::uint64_t> PatientStore::read_metrics() const {
    std::map<std::string, std::uint64_t> out;
    for (const auto& line : load_lines(impl_->dir / "metrics.tsv")) {
        const auto f = split_tsv(line);
        if (f.size() == 2) out[f[0]] = parse_number<std::uint64_t>(f[1], "metric");
    }
    return out;
}

}  // namespace ehc::store
