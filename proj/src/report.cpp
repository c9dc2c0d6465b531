#include "ehc/report.hpp"

#include "ehc/error.hpp"
#include "ehc/kvtext.hpp"
#include "ehc/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ehc::report {

namespace fs = std::filesystem;

LatencyStats LatencyStats::of(std::vector<std::uint64_t> v) {
    LatencyStats s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.count = v.size();
    s.min_ms = v.front();
    s.max_ms = v.back();
    const std::size_t n = v.size();
    s.median_ms = n % 2 ? static_cast<double>(v[n / 2]) : (static_cast<double>(v[n / 2 - 1]) + v[n / 2]) / 2.0;
    return s;
}

std::uint64_t Counts::readings_total() const noexcept {
    return readings_by_band[0] + readings_by_band[1] + readings_by_band[2];
}

void Counts::add(const Counts& o) {
    for (std::size_t i = 0; i < 3; ++i) readings_by_band[i] += o.readings_by_band[i];
    alerts_warning += o.alerts_warning;
    alerts_critical += o.alerts_critical;
    ack_latencies_ms.insert(ack_latencies_ms.end(), o.ack_latencies_ms.begin(), o.ack_latencies_ms.end());
    escalations += o.escalations;
    exhausted += o.exhausted;
}

namespace {

// Complete lines only: a torn tail (no trailing newline) is ignored.
std::vector<std::string> complete_lines(const fs::path& p) {
    std::vector<std::string> out;
    if (!fs::exists(p)) return out;
    const std::string text = store::read_file(p);
    std::size_t pos = 0;
    while (true) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;
        out.emplace_back(text, pos, nl - pos);
        pos = nl + 1;
    }
    return out;
}

}  // namespace

ReportSummary summarize(const fs::path& dir, const Window& window) {
    if (!fs::is_directory(dir)) throw Error("store directory not readable: " + dir.string());
    ReportSummary s;

    if (fs::exists(dir / "patients.tsv")) {
        for (const auto& p : store::parse_patients_tsv(store::read_file(dir / "patients.tsv"))) {
            s.patients[p.id];
        }
    }

    if (fs::is_directory(dir / "readings")) {
        for (const auto& entry : fs::directory_iterator(dir / "readings")) {
            if (entry.path().extension() != ".log") continue;
            PatientId pid = 0;
            try {
                pid = std::stoll(entry.path().stem().string());
            } catch (const std::exception&) {
                continue;
            }
            Counts& c = s.patients[pid];
            for (const auto& line : complete_lines(entry.path())) {
                if (line.empty()) continue;
                auto r = store::parse_reading_line(line, pid);
                if (!window.contains(r.timestamp_ms)) continue;
                ++c.readings_by_band[static_cast<std::size_t>(r.band)];
            }
        }
    }

    struct Tracked {
        PatientId patient;
        TimestampMs raised_at;
    };
    std::map<std::uint64_t, Tracked> in_scope;
    for (const auto& line : complete_lines(dir / "alerts.log")) {
        if (line.empty()) continue;
        auto e = store::parse_alert_line(line);
        using Ev = store::AlertLogEvent;
        if (e.event == Ev::Raised) {
            if (!window.contains(e.time_ms)) continue;
            in_scope[e.alert_id] = {e.patient_id, e.time_ms};
            Counts& c = s.patients[e.patient_id];
            if (e.band == Band::Critical) ++c.alerts_critical;
            else ++c.alerts_warning;
            continue;
        }
        auto it = in_scope.find(e.alert_id);
        if (it == in_scope.end()) continue;
        Counts& c = s.patients[it->second.patient];
        switch (e.event) {
            case Ev::Renotified: ++c.escalations; break;
            case Ev::Exhausted: ++c.exhausted; break;
            case Ev::Acked:
                c.ack_latencies_ms.push_back(e.time_ms >= it->second.raised_at ? e.time_ms - it->second.raised_at : 0);
                break;
            default: break;
        }
    }

    for (const auto& [pid, c] : s.patients) s.totals.add(c);

    for (const auto& line : complete_lines(dir / "metrics.tsv")) {
        auto f = store::split_tsv(line);
        if (f.size() != 2) continue;
        try {
            s.frame_metrics[f[0]] = std::stoull(f[1]);
        } catch (const std::exception&) {
        }
    }
    return s;
}

namespace {

std::string ms(double v) { return kv::format_number(v); }

std::vector<std::string> row(const std::string& label, const Counts& c) {
    const auto lat = c.ack_latency();
    const bool any = lat.count > 0;
    return {label,
            std::to_string(c.readings_by_band[0]),
            std::to_string(c.readings_by_band[1]),
            std::to_string(c.readings_by_band[2]),
            std::to_string(c.readings_total()),
            std::to_string(c.alerts_warning),
            std::to_string(c.alerts_critical),
            std::to_string(c.alerts_total()),
            std::to_string(lat.count),
            any ? std::to_string(lat.min_ms) : "-",
            any ? ms(lat.median_ms) : "-",
            any ? std::to_string(lat.max_ms) : "-",
            std::to_string(c.escalations),
            std::to_string(c.exhausted)};
}

const std::vector<std::string> kColumns = {
    "patient_id",       "readings_normal",  "readings_warning",  "readings_critical",  "readings_total",
    "alerts_warning",   "alerts_critical",  "alerts_total",      "acked",              "ack_latency_min_ms",
    "ack_latency_median_ms", "ack_latency_max_ms", "escalations", "exhausted"};

}  // namespace

std::string render_tsv(const ReportSummary& s) {
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
        out << '\n';
    };
    emit(kColumns);
    for (const auto& [pid, c] : s.patients) emit(row(std::to_string(pid), c));
    emit(row("TOTAL", s.totals));
    out << "\nmetric\tvalue\n";
    for (const auto& [k, v] : s.frame_metrics) out << k << '\t' << v << '\n';
    return out.str();
}

std::string render_text(const ReportSummary& s) {
    const std::vector<std::string> head = {"patient", "normal", "warning", "critical", "readings", "alerts W",
                                           "alerts C", "acked", "ack min", "ack median", "ack max", "escalations",
                                           "exhausted"};
    std::vector<std::vector<std::string>> rows;
    auto strip = [](std::vector<std::string> r) {
        r.erase(r.begin() + 7);  // alerts_total is implied by the two columns before it
        return r;
    };
    rows.push_back(head);
    for (const auto& [pid, c] : s.patients) rows.push_back(strip(row(std::to_string(pid), c)));
    rows.push_back(strip(row("TOTAL", s.totals)));

    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());

    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out << "  ";
            const std::size_t pad = width[i] - r[i].size();
            if (i == 0) out << r[i] << std::string(pad, ' ');
            else out << std::string(pad, ' ') << r[i];
        }
        out << '\n';
    };
    line(rows.front());
    std::size_t total_width = 0;
    for (auto w : width) total_width += w + 2;
    out << std::string(total_width - 2, '-') << '\n';
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) line(rows[i]);
    out << std::string(total_width - 2, '-') << '\n';
    line(rows.back());
    out << "(ack latencies in ms)\n";

    if (!s.frame_metrics.empty()) {
        out << "\nGateway metrics\n";
        for (const auto& [k, v] : s.frame_metrics) out << "  " << k << ": " << v << '\n';
    }
    return out.str();
}

}  // namespace ehc::report
