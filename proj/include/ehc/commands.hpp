#pragma once

// Operator commands behind the `ehc` executable. Each returns the process
// exit code: 0 success, 1 runtime fault, 2 usage or validation error.

#include "ehc/dates.hpp"
#include "ehc/vital.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

namespace ehc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct ServeOptions {
    std::filesystem::path config;
    /// Overrides for the ports in the config file; 0 picks a free port.
    std::optional<int> http_port;
    std::optional<int> udp_port;
    /// Extra stop trigger besides SIGINT/SIGTERM (used by tests).
    const std::atomic<bool>* stop{nullptr};
    /// Called once both listeners are up, with the bound ports.
    std::function<void(int http_port, int udp_port)> on_ready;
};

int cmd_serve(const ServeOptions& options, std::ostream& out, std::ostream& err);

struct SimulateOptions {
    std::filesystem::path scenario;
    /// Replaces both the signal seed and the impairment seed.
    std::optional<std::uint64_t> seed;
    /// Simulated seconds per wall-clock second; 0 runs unpaced.
    double speed{0.0};
    /// "in-process" or "udp://host:port".
    std::string target{"in-process"};
    /// In-process only: store directory (created when missing).
    std::optional<std::filesystem::path> store;
    std::optional<std::filesystem::path> kb;
    std::optional<std::filesystem::path> patients;
    DateOrder date_order{DateOrder::MonthDayYear};
    /// Defaults to <store>/delivery.log, or ./delivery.log for a URL target.
    std::optional<std::filesystem::path> delivery_log;
    std::optional<std::filesystem::path> notify_log;
    bool quiet{false};
};

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);

struct ReportOptions {
    std::filesystem::path store;
    std::optional<TimestampMs> from;
    std::optional<TimestampMs> to;
    /// Machine-readable copy; defaults to <store>/report.tsv.
    std::optional<std::filesystem::path> tsv_out;
};

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

int cmd_import_patients(const std::filesystem::path& tsv, const std::filesystem::path& store,
                        DateOrder order, std::ostream& out, std::ostream& err);

struct ReplayOptions {
    std::filesystem::path delivery_log;
    std::filesystem::path store;
    std::optional<std::filesystem::path> kb;
    /// Supplies the node to patient mapping; identity mapping otherwise.
    std::optional<std::filesystem::path> scenario;
};

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);

}  // namespace ehc::cli
