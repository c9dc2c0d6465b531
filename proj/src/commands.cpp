#include "ehc/commands.hpp"

#include "ehc/clock.hpp"
#include "ehc/config.hpp"
#include "ehc/gateway.hpp"
#include "ehc/http_api.hpp"
#include "ehc/kvtext.hpp"
#include "ehc/report.hpp"
#include "ehc/simulator.hpp"
#include "ehc/store.hpp"
#include "ehc/udp_listener.hpp"

#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

namespace ehc::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled.store(true); }

// Runs `body`, mapping validation problems to exit 2 and anything else to 1.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        for (const auto& v : e.violations()) err << "  - " << v << '\n';
        return kExitUsage;
    } catch (const kv::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

// Missing or unreadable input named on the command line is a usage error.
class UsageError : public Error {
public:
    using Error::Error;
};

kb::KnowledgeBase read_kb_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw UsageError("knowledge base file not found: " + p.string());
    return kb::load_kb(store::read_file(p));
}

void import_into(store::PatientStore& db, const fs::path& tsv, DateOrder order, bool overwrite) {
    if (!fs::is_regular_file(tsv)) throw UsageError("patients file not found: " + tsv.string());
    for (const auto& p : store::parse_patients_tsv(store::read_file(tsv), order)) {
        if (overwrite || !db.has_patient(p.id)) db.upsert_patient(p);
    }
}

// The store keeps physician edits; a newer revision in the file wins.
kb::KnowledgeBase choose_kb(store::PatientStore& db, std::optional<kb::KnowledgeBase> from_file) {
    auto stored = db.load_kb();
    if (stored && (!from_file || stored->revision >= from_file->revision)) return *stored;
    kb::KnowledgeBase chosen = from_file ? *from_file : kb::default_knowledge_base();
    db.save_kb(chosen);
    return chosen;
}

template <class F>
int with_usage_errors(std::ostream& err, F&& body) {
    return guarded(err, [&]() -> int {
        try {
            return body();
        } catch (const UsageError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    });
}

void print_metrics(std::ostream& out, const std::map<std::string, std::uint64_t>& m) {
    for (const auto& [k, v] : m) out << "  " << k << ": " << v << '\n';
}

}  // namespace

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
    return with_usage_errors(err, [&]() -> int {
        if (!fs::is_regular_file(o.config)) throw UsageError("config file not found: " + o.config.string());
        ServiceConfig cfg = load_service_config(o.config);
        if (o.http_port) cfg.http_port = *o.http_port;
        if (o.udp_port) cfg.udp_port = *o.udp_port;

        kb::KnowledgeBase file_kb = read_kb_file(cfg.kb_path);
        auto db = store::PatientStore::open(cfg.store_dir, true);
        if (cfg.patients_path) {
            import_into(*db, *cfg.patients_path, cfg.date_order.value_or(DateOrder::MonthDayYear), false);
        }
        kb::KnowledgeBase active = choose_kb(*db, file_kb);

        SystemClock clock;
        Gateway gw(cfg.gateway, *db, active, clock);
        for (const auto& s : cfg.sinks) {
            std::shared_ptr<notify::NotificationSink> sink;
            if (s.type == SinkConfig::Type::Console) sink = std::make_shared<notify::ConsoleSink>(out);
            else sink = std::make_shared<notify::FileSink>(s.path);
            for (auto r : s.roles) gw.add_sink(r, sink);
        }

        ApiServer api(gw);
        const int http_port = api.bind(cfg.http_host, cfg.http_port);
        UdpListener udp(gw);
        const int udp_port = udp.bind(cfg.udp_host, cfg.udp_port);

        g_signalled = false;
        auto prev_int = std::signal(SIGINT, on_signal);
        auto prev_term = std::signal(SIGTERM, on_signal);

        api.start();
        udp.start();
        out << "serving http://" << cfg.http_host << ':' << http_port << "  udp " << cfg.udp_host << ':' << udp_port
            << "  kb revision " << active.revision << std::endl;
        if (o.on_ready) o.on_ready(http_port, udp_port);

        auto should_stop = [&] { return g_signalled.load() || (o.stop && o.stop->load()); };
        auto next_tick = std::chrono::steady_clock::now();
        while (!should_stop()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            if (std::chrono::steady_clock::now() >= next_tick) {
                gw.escalate(clock.now_ms());
                gw.flush_metrics();
                next_tick += std::chrono::milliseconds(cfg.escalation_tick_ms);
            }
        }

        udp.stop();
        api.stop();
        gw.flush_metrics();
        std::signal(SIGINT, prev_int);
        std::signal(SIGTERM, prev_term);
        out << "stopped" << std::endl;
        return kExitOk;
    });
}

namespace {

struct UdpTarget {
    std::string host;
    int port{0};
};

std::optional<UdpTarget> parse_udp_url(const std::string& url) {
    const std::string prefix = "udp://";
    if (url.rfind(prefix, 0) != 0) return std::nullopt;
    auto rest = url.substr(prefix.size());
    auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    try {
        int port = std::stoi(rest.substr(colon + 1));
        if (port <= 0 || port > 65535) return std::nullopt;
        return UdpTarget{rest.substr(0, colon), port};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Sleeps until simulated time `t` is due at the given speed.
class Pacer {
public:
    Pacer(TimestampMs origin, double speed)
        : origin_(origin), speed_(speed), wall_start_(std::chrono::steady_clock::now()) {}

    void wait_for(TimestampMs t) const {
        if (speed_ <= 0 || t <= origin_) return;
        const double wall_ms = static_cast<double>(t - origin_) / speed_;
        std::this_thread::sleep_until(wall_start_ + std::chrono::microseconds(static_cast<std::int64_t>(wall_ms * 1000)));
    }

private:
    TimestampMs origin_;
    double speed_;
    std::chrono::steady_clock::time_point wall_start_;
};

}  // namespace

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    return with_usage_errors(err, [&]() -> int {
        if (!fs::is_regular_file(o.scenario)) throw UsageError("scenario file not found: " + o.scenario.string());
        if (o.speed < 0) throw UsageError("--speed must be >= 0");
        sim::Scenario sc = sim::load_scenario_file(o.scenario.string());
        if (o.seed) {
            sc.seed = *o.seed;
            sc.impairment.seed = *o.seed;
        }

        const bool in_process = o.target == "in-process";
        std::optional<UdpTarget> udp;
        if (!in_process) {
            udp = parse_udp_url(o.target);
            if (!udp) throw UsageError("--target must be in-process or udp://host:port, got '" + o.target + "'");
        }
        if (in_process && !o.store) throw UsageError("--store is required for the in-process target");

        const auto delivered = sim::apply_impairment(sim::encode_stream(sim::run_fleet(sc)), sc.impairment);
        const fs::path log_path =
            o.delivery_log ? *o.delivery_log : (in_process ? *o.store / "delivery.log" : fs::path("delivery.log"));

        const TimestampMs end_ms = sc.start_epoch_ms + static_cast<TimestampMs>(sc.duration_s * 1000.0);

        if (!in_process) {
            store::write_file_atomic(log_path, sim::format_delivery_log(delivered));
            UdpSender sender(udp->host, udp->port);
            Pacer pacer(sc.start_epoch_ms, o.speed);
            for (const auto& f : delivered) {
                pacer.wait_for(f.time_ms);
                sender.send(f.frame);
            }
            if (!o.quiet) {
                out << "sent " << delivered.size() << " frames to " << o.target << "; delivery log " << log_path.string()
                    << '\n';
            }
            return kExitOk;
        }

        std::optional<kb::KnowledgeBase> file_kb;
        if (o.kb) file_kb = read_kb_file(*o.kb);
        auto db = store::PatientStore::open(*o.store, true);
        if (o.patients) import_into(*db, *o.patients, o.date_order, false);

        std::vector<std::string> missing;
        GatewayConfig gcfg;
        gcfg.identity_fallback = false;
        for (const auto& n : sc.nodes) {
            gcfg.node_patients[n.node_id] = n.patient_id;
            if (!db->has_patient(n.patient_id)) {
                missing.push_back("patient " + std::to_string(n.patient_id) + " (node " + std::to_string(n.node_id) +
                                  ") is not in the store");
            }
        }
        if (!missing.empty()) throw ValidationError(std::move(missing));

        kb::KnowledgeBase active = choose_kb(*db, file_kb);
        store::write_file_atomic(log_path, sim::format_delivery_log(delivered));

        SimulatedClock clock(sc.start_epoch_ms);
        Gateway gw(gcfg, *db, active, clock);
        if (o.notify_log) {
            auto sink = std::make_shared<notify::FileSink>(*o.notify_log);
            gw.add_sink(notify::Role::Nurse, sink);
            gw.add_sink(notify::Role::Physician, sink);
        }
        if (!o.quiet) {
            auto console = std::make_shared<notify::ConsoleSink>(out);
            gw.add_sink(notify::Role::Nurse, console);
            gw.add_sink(notify::Role::Physician, console);
        }

        const auto t0 = std::chrono::steady_clock::now();
        Pacer pacer(sc.start_epoch_ms, o.speed);
        for (const auto& f : delivered) {
            pacer.wait_for(f.time_ms);
            if (f.time_ms > clock.now_ms()) clock.set(f.time_ms);
            gw.escalate(clock.now_ms());
            gw.ingest(f.frame, clock.now_ms());
        }
        const TimestampMs last = delivered.empty() ? end_ms : std::max(end_ms, delivered.back().time_ms);
        pacer.wait_for(last);
        if (last > clock.now_ms()) clock.set(last);
        gw.escalate(clock.now_ms());
        gw.flush_metrics();
        const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        if (!o.quiet) {
            out << "simulated " << sc.duration_s << " s over " << sc.nodes.size() << " node(s) in " << wall_s
                << " s wall time\n";
            out << "delivery log: " << log_path.string() << '\n';
            print_metrics(out, gw.metrics());
        }
        return kExitOk;
    });
}

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
    return with_usage_errors(err, [&]() -> int {
        if (!fs::is_directory(o.store)) throw UsageError("store directory not readable: " + o.store.string());
        report::Window w{o.from, o.to};
        auto summary = report::summarize(o.store, w);
        out << report::render_text(summary);
        const fs::path tsv = o.tsv_out ? *o.tsv_out : o.store / "report.tsv";
        store::write_file_atomic(tsv, report::render_tsv(summary));
        out << "report written to " << tsv.string() << '\n';
        return kExitOk;
    });
}

int cmd_import_patients(const fs::path& tsv, const fs::path& store_dir, DateOrder order, std::ostream& out,
                        std::ostream& err) {
    return with_usage_errors(err, [&]() -> int {
        auto db = store::PatientStore::open(store_dir, true);
        import_into(*db, tsv, order, true);
        auto all = db->find_patients(std::nullopt, std::nullopt);
        out << all.size() << " record(s) found.\n";
        return kExitOk;
    });
}

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
    return with_usage_errors(err, [&]() -> int {
        if (!fs::is_regular_file(o.delivery_log)) {
            throw UsageError("delivery log not found: " + o.delivery_log.string());
        }
        auto delivered = sim::parse_delivery_log(store::read_file(o.delivery_log));
        GatewayConfig gcfg;
        if (o.scenario) {
            if (!fs::is_regular_file(*o.scenario)) throw UsageError("scenario file not found: " + o.scenario->string());
            auto sc = sim::load_scenario_file(o.scenario->string());
            gcfg.identity_fallback = false;
            for (const auto& n : sc.nodes) gcfg.node_patients[n.node_id] = n.patient_id;
        }
        std::optional<kb::KnowledgeBase> file_kb;
        if (o.kb) file_kb = read_kb_file(*o.kb);
        auto db = store::PatientStore::open(o.store, true);
        kb::KnowledgeBase active = choose_kb(*db, file_kb);

        SimulatedClock clock(delivered.empty() ? 0 : delivered.front().time_ms);
        Gateway gw(gcfg, *db, active, clock);
        for (const auto& f : delivered) {
            if (f.time_ms > clock.now_ms()) clock.set(f.time_ms);
            gw.escalate(clock.now_ms());
            gw.ingest(f.frame, clock.now_ms());
        }
        gw.flush_metrics();
        out << "replayed " << delivered.size() << " frame(s)\n";
        print_metrics(out, gw.metrics());
        return kExitOk;
    });
}

}  // namespace ehc::cli
