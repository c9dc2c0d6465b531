// ehc: run the gateway, drive simulations, import patients, report.

#include "ehc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ehc;

int main(int argc, char** argv) {
    CLI::App app{"Elderly healthcare monitoring gateway"};
    app.require_subcommand(1);

    cli::ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the gateway (HTTP API, live stream, UDP ingest)");
    serve_cmd->add_option("config", serve.config, "Gateway config file")->required();
    int http_port = -1, udp_port = -1;
    serve_cmd->add_option("--http-port", http_port, "Override the configured HTTP port");
    serve_cmd->add_option("--udp-port", udp_port, "Override the configured UDP port");

    cli::SimulateOptions sim;
    std::string store, kb, patients, delivery, notify_log, date_format = "mdy";
    std::uint64_t seed = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario against a gateway");
    sim_cmd->add_option("scenario", sim.scenario, "Scenario file")->required();
    auto* seed_opt = sim_cmd->add_option("--seed", seed, "Override the scenario and impairment seeds");
    sim_cmd->add_option("--speed", sim.speed, "Simulated seconds per wall second (0 = unpaced)");
    sim_cmd->add_option("--target", sim.target, "in-process or udp://host:port")->capture_default_str();
    sim_cmd->add_option("--store", store, "Store directory (in-process target)");
    sim_cmd->add_option("--kb", kb, "Knowledge base file");
    sim_cmd->add_option("--patients", patients, "Patients TSV to import before the run");
    sim_cmd->add_option("--date-format", date_format, "Slash-date order in the patients file: mdy or dmy");
    sim_cmd->add_option("--delivery-log", delivery, "Where to write the delivery log");
    sim_cmd->add_option("--notify-log", notify_log, "Append notifications to this file");
    sim_cmd->add_flag("--quiet", sim.quiet, "Only report errors");

    cli::ReportOptions rep;
    std::string tsv_out;
    TimestampMs from = 0, to = 0;
    auto* rep_cmd = app.add_subcommand("report", "Summarize a store");
    rep_cmd->add_option("store", rep.store, "Store directory")->required();
    auto* from_opt = rep_cmd->add_option("--from", from, "Window start, epoch ms (inclusive)");
    auto* to_opt = rep_cmd->add_option("--to", to, "Window end, epoch ms (inclusive)");
    rep_cmd->add_option("--tsv", tsv_out, "Machine-readable output (default <store>/report.tsv)");

    std::string import_file, import_store, import_dates = "mdy";
    auto* imp_cmd = app.add_subcommand("import-patients", "Load a patients TSV into a store");
    imp_cmd->add_option("file", import_file, "Patients TSV")->required();
    imp_cmd->add_option("--store", import_store, "Store directory")->required();
    imp_cmd->add_option("--date-format", import_dates, "Slash-date order: mdy or dmy");

    cli::ReplayOptions replay;
    std::string replay_kb, replay_scenario;
    auto* rp_cmd = app.add_subcommand("replay", "Feed a delivery log through an in-process gateway");
    rp_cmd->add_option("log", replay.delivery_log, "Delivery log")->required();
    rp_cmd->add_option("--store", replay.store, "Store directory")->required();
    rp_cmd->add_option("--kb", replay_kb, "Knowledge base file");
    rp_cmd->add_option("--scenario", replay_scenario, "Scenario supplying the node to patient mapping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitUsage;
    }

    auto order_of = [](const std::string& s) -> std::optional<DateOrder> { return parse_date_order(s); };

    if (*serve_cmd) {
        if (http_port >= 0) serve.http_port = http_port;
        if (udp_port >= 0) serve.udp_port = udp_port;
        return cli::cmd_serve(serve, std::cout, std::cerr);
    }
    if (*sim_cmd) {
        if (*seed_opt) sim.seed = seed;
        if (!store.empty()) sim.store = store;
        if (!kb.empty()) sim.kb = kb;
        if (!patients.empty()) sim.patients = patients;
        if (!delivery.empty()) sim.delivery_log = delivery;
        if (!notify_log.empty()) sim.notify_log = notify_log;
        auto order = order_of(date_format);
        if (!order) {
            std::cerr << "error: --date-format must be mdy or dmy\n";
            return cli::kExitUsage;
        }
        sim.date_order = *order;
        return cli::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*rep_cmd) {
        if (*from_opt) rep.from = from;
        if (*to_opt) rep.to = to;
        if (!tsv_out.empty()) rep.tsv_out = tsv_out;
        return cli::cmd_report(rep, std::cout, std::cerr);
    }
    if (*imp_cmd) {
        auto order = order_of(import_dates);
        if (!order) {
            std::cerr << "error: --date-format must be mdy or dmy\n";
            return cli::kExitUsage;
        }
        return cli::cmd_import_patients(import_file, import_store, *order, std::cout, std::cerr);
    }
    if (*rp_cmd) {
        if (!replay_kb.empty()) replay.kb = replay_kb;
        if (!replay_scenario.empty()) replay.scenario = replay_scenario;
        return cli::cmd_replay(replay, std::cout, std::cerr);
    }
    return cli::kExitUsage;
}
