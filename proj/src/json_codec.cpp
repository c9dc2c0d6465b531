#include "ehc/json_codec.hpp"

#include "ehc/error.hpp"

#include <cmath>
#include <set>

namespace ehc::json {

namespace {

json bound(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json roles(const std::set<notify::Role>& rs) {
    json out = json::array();
    for (auto r : rs) out.push_back(notify::to_string(r));
    return out;
}

// Collects shape errors so a bad body is reported in one response.
class Reader {
public:
    Reader(const json& j, std::string where, std::vector<std::string>& errs)
        : j_(j), where_(std::move(where)), errs_(errs) {
        if (!j_.is_object()) errs_.push_back(where_ + ": expected an object");
    }

    void allow(std::initializer_list<const char*> keys) {
        if (!j_.is_object()) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!ok.count(it.key())) errs_.push_back(where_ + ": unknown field '" + it.key() + "'");
        }
    }

    void str(const char* key, std::string& out) {
        if (auto* v = get(key)) {
            if (v->is_string()) out = v->get<std::string>();
            else if (!v->is_null()) bad(key, "a string");
        }
    }

    void num(const char* key, std::optional<double>& out) {
        if (auto* v = get(key)) {
            if (v->is_number()) out = v->get<double>();
            else if (!v->is_null()) bad(key, "a number or null");
        }
    }

    const json* get(const char* key) const {
        if (!j_.is_object()) return nullptr;
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void bad(const std::string& key, const char* expected) {
        errs_.push_back(where_ + "." + key + ": expected " + expected);
    }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string>& errs_;
};

double parse_bound(const json& v, double if_null, const std::string& where, std::vector<std::string>& errs) {
    if (v.is_null()) return if_null;
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "-inf") return -INFINITY;
        if (s == "inf" || s == "+inf") return INFINITY;
    }
    errs.push_back(where + ": expected a number or null");
    return 0.0;
}

std::optional<Band> parse_band_json(const json& v, const std::string& where, std::vector<std::string>& errs) {
    if (v.is_string()) {
        if (auto b = parse_band(v.get<std::string>())) return b;
    }
    errs.push_back(where + ": expected Normal, Warning or Critical");
    return std::nullopt;
}

}  // namespace

json to_json(const store::PatientRecord& p) {
    return {
        {"id", p.id},
        {"last_name", p.last_name},
        {"first_name", p.first_name},
        {"address", p.address},
        {"mobile_phone", p.mobile_phone},
        {"home_phone", p.home_phone},
        {"social_insurance_number", p.social_insurance_number},
        {"date_of_birth", p.date_of_birth},
        {"height_ft", opt(p.height_ft)},
        {"weight_lb", opt(p.weight_lb)},
        {"email", p.email},
        {"emergency_contact",
         {{"name", p.emergency_contact.name},
          {"phone", p.emergency_contact.phone},
          {"address", p.emergency_contact.address},
          {"relationship", p.emergency_contact.relationship}}},
    };
}

store::PatientRecord patient_from_json(const json& j, PatientId id) {
    std::vector<std::string> errs;
    store::PatientRecord p;
    p.id = id;
    Reader r(j, "patient", errs);
    r.allow({"id", "last_name", "first_name", "address", "mobile_phone", "home_phone", "social_insurance_number",
             "date_of_birth", "height_ft", "weight_lb", "email", "emergency_contact"});
    if (auto* v = r.get("id"); v && !(v->is_number_integer() && v->get<PatientId>() == id)) {
        errs.push_back("patient.id: must match the id in the URL");
    }
    r.str("last_name", p.last_name);
    r.str("first_name", p.first_name);
    r.str("address", p.address);
    r.str("mobile_phone", p.mobile_phone);
    r.str("home_phone", p.home_phone);
    r.str("social_insurance_number", p.social_insurance_number);
    r.str("date_of_birth", p.date_of_birth);
    r.num("height_ft", p.height_ft);
    r.num("weight_lb", p.weight_lb);
    r.str("email", p.email);
    if (auto* ec = r.get("emergency_contact"); ec && !ec->is_null()) {
        Reader e(*ec, "patient.emergency_contact", errs);
        e.allow({"name", "phone", "address", "relationship"});
        e.str("name", p.emergency_contact.name);
        e.str("phone", p.emergency_contact.phone);
        e.str("address", p.emergency_contact.address);
        e.str("relationship", p.emergency_contact.relationship);
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
    return p;
}

json to_json(const store::ReadingRecord& r) {
    return {
        {"patient_id", r.patient_id}, {"node_id", r.node_id},         {"seq", r.seq},
        {"timestamp_ms", r.timestamp_ms}, {"kind", to_string(r.kind)}, {"value", from_x10(r.value_x10)},
        {"value_x10", r.value_x10},   {"unit", unit_of(r.kind)},       {"band", to_string(r.band)},
    };
}

json to_json(const store::NoteRecord& n) {
    json j = {{"patient_id", n.patient_id}, {"created_at", n.created_at}, {"text", n.text}, {"reading", nullptr}};
    if (n.reading) {
        j["reading"] = {{"node_id", n.reading->node_id},
                        {"seq", n.reading->seq},
                        {"kind", to_string(n.reading->kind)},
                        {"timestamp_ms", n.reading->timestamp_ms}};
    }
    return j;
}

json to_json(const store::PrescriptionRecord& p) {
    return {{"patient_id", p.patient_id},
            {"physician_registration_number", p.physician_registration_number},
            {"text", p.text},
            {"created_at", p.created_at}};
}

json to_json(const store::ClinicalEntry& e) {
    return {{"patient_id", e.patient_id},
            {"category", store::to_string(e.category)},
            {"created_at", e.created_at},
            {"text", e.text}};
}

json to_json(const Alert& a) {
    json trend = nullptr;
    if (a.event.trend) {
        trend = {{"observed_delta", a.event.trend->observed_delta}, {"window_span_s", a.event.trend->window_span_s}};
    }
    json acked_role = nullptr;
    if (a.acked_role) acked_role = notify::to_string(*a.acked_role);
    return {
        {"alert_id", a.alert_id},
        {"patient_id", a.event.patient_id},
        {"kind", to_string(a.event.kind)},
        {"band", to_string(a.event.band)},
        {"cause", engine::to_string(a.event.cause)},
        {"value", from_x10(a.event.value_x10)},
        {"value_x10", a.event.value_x10},
        {"unit", unit_of(a.event.kind)},
        {"reading_timestamp_ms", a.event.reading_timestamp_ms},
        {"trend", trend},
        {"raised_at", a.event.raised_at},
        {"state", to_string(a.state)},
        {"routed_roles", roles(a.routed_roles)},
        {"created_at", a.created_at},
        {"last_notified_at", a.last_notified_at},
        {"acked_by", opt(a.acked_by)},
        {"acked_role", acked_role},
        {"acked_at", opt(a.acked_at)},
        {"closed_at", opt(a.closed_at)},
        {"close_note", a.close_note},
        {"renotify_count", a.renotify_count},
        {"escalation_exhausted", a.escalation_exhausted},
    };
}

json to_json(const kb::KnowledgeBase& kb) {
    json bands = json::array();
    json trends = json::array();
    for (auto k : kAllVitalKinds) {
        if (const auto* t = kb.table(k)) {
            json iv = json::array();
            for (const auto& i : t->intervals()) {
                iv.push_back({{"lo", bound(i.lo)}, {"hi", bound(i.hi)}, {"band", to_string(i.band)}});
            }
            bands.push_back({{"kind", to_string(k)}, {"unit", unit_of(k)}, {"intervals", iv}});
        }
        if (const auto* r = kb.trend(k)) {
            trends.push_back({{"kind", to_string(k)}, {"window_s", r->window_s}, {"max_abs_delta", r->max_abs_delta}});
        }
    }
    return {
        {"revision", kb.revision},
        {"author", kb.author},
        {"updated_at", kb.updated_at},
        {"bands", bands},
        {"trends", trends},
        {"debounce",
         {{"n_warning_raise", kb.debounce.n_warning_raise},
          {"n_critical_raise", kb.debounce.n_critical_raise},
          {"m_clear", kb.debounce.m_clear}}},
    };
}

kb::KbProposal proposal_from_json(const json& j) {
    std::vector<std::string> errs;
    kb::KbProposal p;
    Reader top(j, "kb", errs);
    top.allow({"revision", "author", "updated_at", "bands", "trends", "debounce"});

    auto kind_of = [&](const json& obj, const std::string& where) -> std::optional<VitalKind> {
        auto it = obj.find("kind");
        if (it != obj.end() && it->is_string()) {
            if (auto k = parse_vital_kind(it->get<std::string>())) return k;
        }
        errs.push_back(where + ".kind: expected a vital kind name");
        return std::nullopt;
    };

    if (auto* bands = top.get("bands")) {
        if (!bands->is_array()) {
            top.bad("bands", "an array");
        } else {
            for (std::size_t i = 0; i < bands->size(); ++i) {
                const json& t = (*bands)[i];
                const std::string where = "kb.bands[" + std::to_string(i) + "]";
                Reader r(t, where, errs);
                if (!t.is_object()) continue;
                r.allow({"kind", "unit", "intervals", "breakpoints", "bands"});
                auto kind = kind_of(t, where);
                if (!kind) continue;
                if (auto* iv = r.get("intervals")) {
                    if (r.get("breakpoints") || r.get("bands")) {
                        errs.push_back(where + ": use either intervals or breakpoints/bands, not both");
                        continue;
                    }
                    if (!iv->is_array()) {
                        r.bad("intervals", "an array");
                        continue;
                    }
                    kb::ProposedBandTable table{*kind, {}, std::nullopt};
                    for (std::size_t n = 0; n < iv->size(); ++n) {
                        const json& e = (*iv)[n];
                        const std::string w = where + ".intervals[" + std::to_string(n) + "]";
                        if (!e.is_object() || !e.contains("lo") || !e.contains("hi") || !e.contains("band")) {
                            errs.push_back(w + ": expected {lo, hi, band}");
                            continue;
                        }
                        double lo = parse_bound(e["lo"], -INFINITY, w + ".lo", errs);
                        double hi = parse_bound(e["hi"], INFINITY, w + ".hi", errs);
                        auto band = parse_band_json(e["band"], w + ".band", errs);
                        if (band) table.intervals.push_back({lo, hi, *band});
                    }
                    p.bands.push_back(std::move(table));
                } else {
                    const json* bp = r.get("breakpoints");
                    const json* bs = r.get("bands");
                    if (!bp || !bs || !bp->is_array() || !bs->is_array()) {
                        errs.push_back(where + ": expected intervals or breakpoints + bands arrays");
                        continue;
                    }
                    std::vector<double> breaks;
                    for (const auto& v : *bp) breaks.push_back(parse_bound(v, 0.0, where + ".breakpoints", errs));
                    std::vector<Band> labels;
                    for (const auto& v : *bs) {
                        if (auto b = parse_band_json(v, where + ".bands", errs)) labels.push_back(*b);
                    }
                    p.bands.push_back(kb::ProposedBandTable::from_breakpoints(*kind, breaks, labels));
                }
            }
        }
    }

    if (auto* trends = top.get("trends")) {
        if (!trends->is_array()) {
            top.bad("trends", "an array");
        } else {
            for (std::size_t i = 0; i < trends->size(); ++i) {
                const json& t = (*trends)[i];
                const std::string where = "kb.trends[" + std::to_string(i) + "]";
                Reader r(t, where, errs);
                if (!t.is_object()) continue;
                r.allow({"kind", "window_s", "max_abs_delta"});
                auto kind = kind_of(t, where);
                std::optional<double> window, delta;
                r.num("window_s", window);
                r.num("max_abs_delta", delta);
                if (!window || !delta) {
                    errs.push_back(where + ": window_s and max_abs_delta are required");
                    continue;
                }
                if (kind) p.trends.push_back({*kind, *window, *delta});
            }
        }
    }

    if (auto* d = top.get("debounce")) {
        Reader r(*d, "kb.debounce", errs);
        r.allow({"n_warning_raise", "n_critical_raise", "m_clear"});
        auto read_int = [&](const char* key, int& out) {
            if (auto* v = r.get(key)) {
                if (v->is_number_integer()) out = v->get<int>();
                else r.bad(key, "an integer");
            }
        };
        read_int("n_warning_raise", p.debounce.n_warning_raise);
        read_int("n_critical_raise", p.debounce.n_critical_raise);
        read_int("m_clear", p.debounce.m_clear);
    }

    if (!errs.empty()) throw ValidationError(std::move(errs));
    return p;
}

json to_json(const StreamEvent& ev) {
    json data = std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ReadingStored>) return to_json(p.reading);
            else if constexpr (std::is_same_v<T, KbUpdated>)
                return {{"revision", p.revision}, {"author", p.author}, {"updated_at", p.updated_at}};
            else return to_json(p.alert);
        },
        ev.payload);
    return {{"seq", ev.sequence},
            {"type", event_type_name(ev.payload)},
            {"committed_at", ev.committed_at},
            {"patient_id", ev.patient_id},
            {"data", data}};
}

}  // namespace ehc::json
