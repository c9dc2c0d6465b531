#include "ehc/config.hpp"

#include "ehc/kvtext.hpp"
#include "ehc/store.hpp"

#include <set>

namespace ehc {

namespace {

std::set<notify::Role> parse_roles(const kv::Entry& e) {
    std::set<notify::Role> out;
    for (const auto& item : e.as_list()) {
        auto r = notify::parse_role(item);
        if (!r) throw kv::ParseError(e.line, e.key, "unknown role '" + item + "'");
        out.insert(*r);
    }
    return out;
}

int parse_port(const kv::Entry& e) {
    auto v = e.as_int();
    if (v < 0 || v > 65535) throw kv::ParseError(e.line, e.key, "port out of range");
    return static_cast<int>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

ServiceConfig parse_service_config(std::string_view text, const std::filesystem::path& base_dir) {
    const kv::Document doc = kv::parse(text);
    ServiceConfig cfg;
    cfg.store_dir = resolve(base_dir, cfg.store_dir.string());
    bool have_kb = false;

    for (const auto& sec : doc.sections) {
        if (sec.name == "gateway") {
            for (const auto& e : sec.entries) {
                if (e.key == "store") cfg.store_dir = resolve(base_dir, e.value);
                else if (e.key == "kb") {
                    cfg.kb_path = resolve(base_dir, e.value);
                    have_kb = true;
                } else if (e.key == "patients") cfg.patients_path = resolve(base_dir, e.value);
                else if (e.key == "date_format") {
                    cfg.date_order = parse_date_order(e.value);
                    if (!cfg.date_order) throw kv::ParseError(e.line, e.key, "expected dmy or mdy");
                } else if (e.key == "http_host") cfg.http_host = e.value;
                else if (e.key == "http_port") cfg.http_port = parse_port(e);
                else if (e.key == "udp_host") cfg.udp_host = e.value;
                else if (e.key == "udp_port") cfg.udp_port = parse_port(e);
                else if (e.key == "escalation_tick_ms") cfg.escalation_tick_ms = static_cast<std::uint32_t>(e.as_uint());
                else throw kv::ParseError(e.line, e.key, "unknown key in [gateway]");
            }
        } else if (sec.name == "nodes") {
            for (const auto& e : sec.entries) {
                kv::Entry key_entry{e.key, e.key, e.line};
                auto node = key_entry.as_uint();
                if (node > 0xFFFF) throw kv::ParseError(e.line, e.key, "node id out of range");
                cfg.gateway.node_patients[static_cast<NodeId>(node)] = e.as_int();
            }
        } else if (sec.name == "routing") {
            for (const auto& e : sec.entries) {
                if (e.key == "warning") cfg.gateway.routing.warning = parse_roles(e);
                else if (e.key == "critical") cfg.gateway.routing.critical = parse_roles(e);
                else throw kv::ParseError(e.line, e.key, "unknown key in [routing]");
            }
        } else if (sec.name == "escalation") {
            auto& esc = cfg.gateway.escalation;
            for (const auto& e : sec.entries) {
                const auto v = static_cast<std::uint32_t>(e.as_uint());
                if (e.key == "critical_interval_s") esc.critical_interval_s = v;
                else if (e.key == "warning_interval_s") esc.warning_interval_s = v;
                else if (e.key == "max_renotifications") esc.max_renotifications = v;
                else throw kv::ParseError(e.line, e.key, "unknown key in [escalation]");
            }
        } else if (sec.name == "sink") {
            SinkConfig sink;
            if (sec.arg == "console") sink.type = SinkConfig::Type::Console;
            else if (sec.arg == "file") sink.type = SinkConfig::Type::File;
            else throw kv::ParseError(sec.line, "sink", "expected [sink console] or [sink file]");
            for (const auto& e : sec.entries) {
                if (e.key == "roles") sink.roles = parse_roles(e);
                else if (e.key == "path" && sink.type == SinkConfig::Type::File) sink.path = resolve(base_dir, e.value);
                else throw kv::ParseError(e.line, e.key, "unknown key in [sink]");
            }
            if (sink.type == SinkConfig::Type::File && sink.path.empty()) {
                throw kv::ParseError(sec.line, "path", "[sink file] needs a path");
            }
            cfg.sinks.push_back(std::move(sink));
        } else {
            throw kv::ParseError(sec.line, sec.name, "unknown section");
        }
    }

    if (!have_kb) throw ValidationError("config: [gateway] kb is required");
    cfg.gateway.routing.validate();
    return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_service_config(store::read_file(path), base);
}

}  // namespace ehc
