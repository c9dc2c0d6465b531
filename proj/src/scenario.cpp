#include "ehc/kvtext.hpp"
#include "ehc/simulator.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ehc::sim {

namespace {

constexpr std::string_view kChannelFields[] = {"baseline", "noise_stddev", "amplitude",
                                               "period_s", "phase_s"};

NodeId parse_node_id(const kv::Entry& e) {
    const auto v = e.as_int();
    if (v < 0 || v > 0xFFFF) throw kv::ParseError(e.line, e.key, "node id must fit in 16 bits");
    return static_cast<NodeId>(v);
}

void apply_channel_field(NodeProfile& node, const kv::Entry& e, std::string_view field,
                         VitalKind kind) {
    auto& ch = node.channel(kind);
    const double v = e.as_double();
    if (field == "baseline") ch.baseline = v;
    else if (field == "noise_stddev") ch.noise_stddev = v;
    else if (field == "amplitude") ch.amplitude = v;
    else if (field == "period_s") ch.period_s = v;
    else if (field == "phase_s") ch.phase_s = v;
}

NodeProfile parse_node(const kv::Section& s) {
    if (s.arg.empty()) throw kv::ParseError(s.line, "node", "section needs a node id: [node <id>]");
    NodeId id = parse_node_id(kv::Entry{"node", s.arg, s.line});
    NodeProfile node = NodeProfile::with_defaults(id, id);

    std::set<VitalKind> baselined;
    const kv::Entry* kinds_entry = nullptr;
    for (const auto& e : s.entries) {
        if (e.key == "patient_id") {
            node.patient_id = e.as_int();
        } else if (e.key == "sample_period_s") {
            node.sample_period_s = e.as_double();
        } else if (e.key == "kinds") {
            kinds_entry = &e;
        } else if (auto dot = e.key.find('.'); dot != std::string::npos) {
            const std::string_view field = std::string_view(e.key).substr(0, dot);
            const auto kind = parse_vital_kind(std::string_view(e.key).substr(dot + 1));
            bool known_field = false;
            for (auto f : kChannelFields) known_field = known_field || f == field;
            if (!known_field || !kind) throw kv::ParseError(e.line, e.key, "unknown node key");
            apply_channel_field(node, e, field, *kind);
            if (field == "baseline") baselined.insert(*kind);
        } else {
            throw kv::ParseError(e.line, e.key, "unknown node key");
        }
    }

    if (kinds_entry) {
        for (auto& ch : node.channels) ch.enabled = false;
        for (const auto& name : kinds_entry->as_list()) {
            auto kind = parse_vital_kind(name);
            if (!kind) throw kv::ParseError(kinds_entry->line, "kinds", "unknown vital kind '" + name + "'");
            node.channel(*kind).enabled = true;
        }
    } else {
        for (auto k : baselined) node.channel(k).enabled = true;
    }
    return node;
}

AnomalyEvent parse_event(const kv::Section& s) {
    AnomalyEvent ev;
    bool have_node = false, have_kind = false;
    for (const auto& e : s.entries) {
        if (e.key == "node_id") {
            ev.node_id = parse_node_id(e);
            have_node = true;
        } else if (e.key == "kind") {
            auto kind = parse_vital_kind(e.value);
            if (!kind) throw kv::ParseError(e.line, e.key, "unknown vital kind '" + e.value + "'");
            ev.kind = *kind;
            have_kind = true;
        } else if (e.key == "start_s") {
            ev.start_s = e.as_double();
        } else if (e.key == "duration_s") {
            ev.duration_s = e.as_double();
        } else if (e.key == "delta") {
            ev.delta = e.as_double();
        } else if (e.key == "ramp_s") {
            ev.ramp_s = e.as_double();
        } else {
            throw kv::ParseError(e.line, e.key, "unknown event key");
        }
    }
    if (!have_node) throw kv::ParseError(s.line, "node_id", "event is missing node_id");
    if (!have_kind) throw kv::ParseError(s.line, "kind", "event is missing kind");
    return ev;
}

ImpairmentConfig parse_impairment(const kv::Section& s) {
    ImpairmentConfig cfg;
    for (const auto& e : s.entries) {
        if (e.key == "loss_prob") cfg.loss_prob = e.as_double();
        else if (e.key == "dup_prob") cfg.dup_prob = e.as_double();
        else if (e.key == "delay_ms_min") cfg.delay_ms_min = static_cast<std::uint32_t>(e.as_uint());
        else if (e.key == "delay_ms_max") cfg.delay_ms_max = static_cast<std::uint32_t>(e.as_uint());
        else if (e.key == "seed") cfg.seed = e.as_uint();
        else throw kv::ParseError(e.line, e.key, "unknown impairment key");
    }
    return cfg;
}

std::string num(double v) { return kv::format_number(v); }

}  // namespace

double default_baseline(VitalKind kind) noexcept {
    switch (kind) {
        case VitalKind::BodyTemperature: return 36.8;
        case VitalKind::HeartRate: return 72.0;
        case VitalKind::SystolicBP: return 120.0;
        case VitalKind::DiastolicBP: return 80.0;
        case VitalKind::BloodGlucose: return 100.0;
    }
    return 0.0;
}

std::vector<VitalKind> NodeProfile::enabled_kinds() const {
    std::vector<VitalKind> out;
    for (auto k : kAllVitalKinds) {
        if (channel(k).enabled) out.push_back(k);
    }
    return out;
}

NodeProfile NodeProfile::with_defaults(NodeId node, PatientId patient) {
    NodeProfile p;
    p.node_id = node;
    p.patient_id = patient;
    for (auto k : kAllVitalKinds) p.channel(k).baseline = default_baseline(k);
    for (auto k : kDefaultVitalKinds) p.channel(k).enabled = true;
    return p;
}

double AnomalyEvent::envelope(double t_s) const noexcept {
    if (t_s < start_s || t_s >= start_s + duration_s) return 0.0;
    if (ramp_s <= 0.0) return 1.0;
    const double up = (t_s - start_s) / ramp_s;
    const double down = (start_s + duration_s - t_s) / ramp_s;
    return std::min({1.0, up, down});
}

const NodeProfile* Scenario::find_node(NodeId id) const {
    for (const auto& n : nodes) {
        if (n.node_id == id) return &n;
    }
    return nullptr;
}

void validate(const Scenario& sc) {
    std::vector<std::string> errs;
    if (!(sc.duration_s > 0)) errs.push_back("duration_s must be > 0");
    if (sc.nodes.empty()) errs.push_back("scenario has no nodes");

    std::set<NodeId> ids;
    for (const auto& n : sc.nodes) {
        const std::string who = "node " + std::to_string(n.node_id);
        if (!ids.insert(n.node_id).second) errs.push_back(who + ": duplicate node id");
        if (!(n.sample_period_s > 0)) errs.push_back(who + ": sample_period_s must be > 0");
        const auto kinds = n.enabled_kinds();
        if (kinds.empty()) errs.push_back(who + ": no enabled vital kinds");
        for (auto k : kAllVitalKinds) {
            const auto& ch = n.channel(k);
            const std::string where = who + " " + std::string(to_string(k));
            if (ch.noise_stddev < 0 || std::isnan(ch.noise_stddev)) {
                errs.push_back(where + ": noise_stddev must be >= 0");
            }
            if (ch.amplitude != 0 && !(ch.period_s > 0)) {
                errs.push_back(where + ": period_s must be > 0 when amplitude is nonzero");
            }
        }
    }

    for (std::size_t i = 0; i < sc.events.size(); ++i) {
        const auto& ev = sc.events[i];
        const std::string who = "event " + std::to_string(i + 1);
        const auto* node = sc.find_node(ev.node_id);
        if (!node) {
            errs.push_back(who + ": references unknown node " + std::to_string(ev.node_id));
        } else if (!node->channel(ev.kind).enabled) {
            errs.push_back(who + ": kind " + std::string(to_string(ev.kind)) +
                           " is not enabled on node " + std::to_string(ev.node_id));
        }
        if (!(ev.duration_s > 0)) errs.push_back(who + ": duration_s must be > 0");
        if (ev.start_s < 0) errs.push_back(who + ": start_s must be >= 0");
        if (ev.ramp_s < 0 || ev.ramp_s > ev.duration_s / 2) {
            errs.push_back(who + ": ramp_s must be within [0, duration_s/2]");
        }
        if (ev.start_s + ev.duration_s > sc.duration_s) {
            errs.push_back(who + ": start_s + duration_s exceeds scenario duration_s");
        }
    }

    const auto& imp = sc.impairment;
    if (!(imp.loss_prob >= 0 && imp.loss_prob <= 1)) errs.push_back("loss_prob must be in [0, 1]");
    if (!(imp.dup_prob >= 0 && imp.dup_prob <= 1)) errs.push_back("dup_prob must be in [0, 1]");
    if (imp.delay_ms_min > imp.delay_ms_max) errs.push_back("delay_ms_min must be <= delay_ms_max");

    if (!errs.empty()) throw ScenarioInvalid(std::move(errs));
}

Scenario load_scenario(std::string_view text) {
    const auto doc = kv::parse(text);
    Scenario sc;
    bool have_header = false;

    for (const auto& s : doc.sections) {
        if (s.name == "scenario") {
            if (have_header) throw kv::ParseError(s.line, "scenario", "repeated [scenario] section");
            have_header = true;
            for (const auto& e : s.entries) {
                if (e.key == "duration_s") sc.duration_s = e.as_double();
                else if (e.key == "seed") sc.seed = e.as_uint();
                else if (e.key == "start_epoch_ms") sc.start_epoch_ms = e.as_uint();
                else throw kv::ParseError(e.line, e.key, "unknown scenario key");
            }
        } else if (s.name == "node") {
            sc.nodes.push_back(parse_node(s));
        } else if (s.name == "event") {
            sc.events.push_back(parse_event(s));
        } else if (s.name == "impairment") {
            sc.impairment = parse_impairment(s);
        } else {
            throw kv::ParseError(s.line, s.name, "unknown section");
        }
    }
    if (!have_header) throw kv::ParseError(1, "scenario", "missing [scenario] section");
    validate(sc);
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open scenario file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

std::string save_scenario(const Scenario& sc) {
    kv::Writer w;
    w.section("scenario")
        .entry("duration_s", sc.duration_s)
        .entry("seed", sc.seed)
        .entry("start_epoch_ms", sc.start_epoch_ms);
    for (const auto& n : sc.nodes) {
        w.section("node", std::to_string(n.node_id));
        w.entry("patient_id", std::int64_t{n.patient_id});
        w.entry("sample_period_s", n.sample_period_s);
        std::string kinds;
        for (auto k : n.enabled_kinds()) {
            if (!kinds.empty()) kinds += ", ";
            kinds += to_string(k);
        }
        w.entry("kinds", std::string_view(kinds));
        for (auto k : kAllVitalKinds) {
            const auto& ch = n.channel(k);
            const std::string suffix = "." + std::string(to_string(k));
            w.entry("baseline" + suffix, num(ch.baseline));
            w.entry("noise_stddev" + suffix, num(ch.noise_stddev));
            w.entry("amplitude" + suffix, num(ch.amplitude));
            w.entry("period_s" + suffix, num(ch.period_s));
            w.entry("phase_s" + suffix, num(ch.phase_s));
        }
    }
    for (const auto& ev : sc.events) {
        w.section("event")
            .entry("node_id", std::int64_t{ev.node_id})
            .entry("kind", to_string(ev.kind))
            .entry("start_s", ev.start_s)
            .entry("duration_s", ev.duration_s)
            .entry("delta", ev.delta)
            .entry("ramp_s", ev.ramp_s);
    }
    const auto& imp = sc.impairment;
    w.section("impairment")
        .entry("loss_prob", imp.loss_prob)
        .entry("dup_prob", imp.dup_prob)
        .entry("delay_ms_min", std::uint64_t{imp.delay_ms_min})
        .entry("delay_ms_max", std::uint64_t{imp.delay_ms_max})
        .entry("seed", imp.seed);
    return w.str();
}

}  // namespace ehc::sim
