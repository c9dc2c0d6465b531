#pragma once

#include "ehc/dates.hpp"
#include "ehc/gateway.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ehc {

struct SinkConfig {
    enum class Type { Console, File };
    Type type{Type::Console};
    std::filesystem::path path;  // File only
    std::set<notify::Role> roles{notify::Role::Nurse, notify::Role::Physician};
};

/// Everything `serve` needs. Relative paths are resolved against the
/// directory holding the config file.
///
///   [gateway]     store, kb, patients, date_format, http_host, http_port,
///                 udp_host, udp_port, escalation_tick_ms
///   [nodes]       <node id> = <patient id>
///   [routing]     warning = Nurse / critical = Nurse, Physician
///   [escalation]  critical_interval_s, warning_interval_s, max_renotifications
///   [sink console] / [sink file]   roles, path
struct ServiceConfig {
    std::filesystem::path store_dir{"store"};
    std::filesystem::path kb_path;
    std::optional<std::filesystem::path> patients_path;
    std::optional<DateOrder> date_order;
    std::string http_host{"127.0.0.1"};
    int http_port{8080};
    std::string udp_host{"0.0.0.0"};
    int udp_port{9750};
    std::uint32_t escalation_tick_ms{1000};
    GatewayConfig gateway;
    std::vector<SinkConfig> sinks;
};

/// Throws kv::ParseError on syntax or unknown keys and ValidationError on
/// bad values. Does not touch the referenced files.
ServiceConfig parse_service_config(std::string_view text, const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);

}  // namespace ehc
