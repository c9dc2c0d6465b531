#include "support.hpp"

#include "ehc/config.hpp"
#include "ehc/gateway.hpp"
#include "ehc/kvtext.hpp"
#include "ehc/report.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

using namespace ehc;
using notify::Role;

namespace {

TEST(Config, ExampleFileLoads) {
    auto cfg = load_service_config(test::fixture("gateway.conf"));
    EXPECT_EQ(cfg.kb_path, test::fixture("default_kb.txt"));
    EXPECT_EQ(cfg.patients_path, test::fixture("fig5_patients.tsv"));
    EXPECT_EQ(cfg.date_order, DateOrder::MonthDayYear);
    EXPECT_EQ(cfg.http_port, 8080);
    EXPECT_EQ(cfg.udp_port, 9750);
    EXPECT_EQ(cfg.gateway.node_patients.size(), 5u);
    EXPECT_EQ(cfg.gateway.patient_for(23), 23);
    EXPECT_EQ(cfg.gateway.patient_for(99), std::nullopt);
    EXPECT_EQ(cfg.gateway.escalation.critical_interval_s, 120u);
    ASSERT_EQ(cfg.sinks.size(), 2u);
    EXPECT_EQ(cfg.sinks[1].type, SinkConfig::Type::File);
}

TEST(Config, DefaultsAndIdentityMapping) {
    auto cfg = parse_service_config("[gateway]\nkb = kb.txt\n", "/etc/ehc");
    EXPECT_EQ(cfg.kb_path, std::filesystem::path("/etc/ehc/kb.txt"));
    EXPECT_EQ(cfg.store_dir, std::filesystem::path("/etc/ehc/store"));
    EXPECT_EQ(cfg.http_port, 8080);
    EXPECT_EQ(cfg.gateway.patient_for(31), 31);
    EXPECT_EQ(cfg.gateway.routing.roles_for(Band::Warning), std::set<Role>{Role::Nurse});
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_service_config("[gateway]\nstore = x\n", "/"), ValidationError);
    EXPECT_THROW(parse_service_config("[gateway]\nkb = k\ncolour = blue\n", "/"), kv::ParseError);
    EXPECT_THROW(parse_service_config("[gateway]\nkb = k\n[mystery]\n", "/"), kv::ParseError);
    EXPECT_THROW(parse_service_config("[gateway]\nkb = k\n[routing]\ncritical = Physician\n", "/"), ValidationError);
    EXPECT_THROW(parse_service_config("[gateway]\nkb = k\nhttp_port = 70000\n", "/"), kv::ParseError);
}

TEST(Latency, MedianOfEvenCountIsMean) {
    EXPECT_EQ(report::LatencyStats::of({}), report::LatencyStats{});
    auto s = report::LatencyStats::of({40, 10, 30, 20});
    EXPECT_EQ(s.count, 4u);
    EXPECT_EQ(s.min_ms, 10u);
    EXPECT_EQ(s.max_ms, 40u);
    EXPECT_DOUBLE_EQ(s.median_ms, 25.0);
    EXPECT_DOUBLE_EQ(report::LatencyStats::of({5, 1, 9}).median_ms, 5.0);
}

TEST(Report, EmptyStoreIsAllZero) {
    test::TempDir dir;
    test::seeded_store(dir.path());
    auto s = report::summarize(dir.path());
    EXPECT_EQ(s.patients.size(), 5u);
    EXPECT_EQ(s.totals.readings_total(), 0u);
    EXPECT_EQ(s.totals.alerts_total(), 0u);
    const auto tsv = report::render_tsv(s);
    EXPECT_EQ(tsv.rfind("patient_id\treadings_normal", 0), 0u);
    EXPECT_NE(tsv.find("TOTAL\t0\t0\t0\t0\t0\t0\t0\t0\t-\t-\t-\t0\t0"), std::string::npos) << tsv;
    EXPECT_THROW(report::summarize(dir.path() / "nope"), Error);
}

// Drives a gateway with random traffic and acks, then checks the file-based
// report against figures taken from the live gateway and store.
TEST(Report, MatchesLiveState) {
    test::TempDir dir;
    auto db = test::seeded_store(dir.path());
    constexpr TimestampMs t0 = 1717200000000;
    SimulatedClock clock{t0};
    Gateway gw(GatewayConfig{}, *db, kb::default_knowledge_base(), clock);

    std::mt19937_64 rng(77);
    const std::vector<NodeId> nodes{23, 24, 25, 27, 28};
    for (std::uint16_t seq = 0; seq < 1500; ++seq) {
        clock.set(t0 + 1000ull * seq);
        for (auto n : nodes) {
            // Episodes every 200 s: a short critical spike or a longer warning run.
            const int phase = (seq + n * 17) % 200;
            const double v = phase < 4 ? (n % 2 ? 130 : 55) : phase < 20 && n % 3 == 0 ? 110 : 72;
            gw.ingest(protocol::encode_packet({n, seq, clock.now_ms(),
                                               {{VitalKind::HeartRate, to_x10(v)},
                                                {VitalKind::BodyTemperature, 368}}}),
                      clock.now_ms());
        }
        gw.escalate(clock.now_ms());
        if (seq % 37 == 0) {
            for (const auto& a : gw.alerts(AlertState::Open)) {
                if (rng() % 2) gw.ack_alert(a.alert_id, "nina", Role::Nurse);
            }
        }
    }
    gw.flush_metrics();

    for (auto window : {report::Window{}, report::Window{t0 + 300000, t0 + 900000}}) {
        auto s = report::summarize(dir.path(), window);
        std::uint64_t alerts_seen = 0;
        for (auto pid : nodes) {
            const auto& c = s.patients.at(pid);
            std::array<std::uint64_t, 3> bands{};
            store::ReadingQuery q;
            q.from = window.from;
            q.to = window.to;
            for (const auto& r : db->query_readings(pid, q)) ++bands[static_cast<int>(r.band)];
            EXPECT_EQ(c.readings_by_band, bands) << pid;

            std::uint64_t warn = 0, crit = 0, esc = 0, exh = 0;
            std::vector<std::uint64_t> lat;
            for (const auto& a : gw.alerts()) {
                if (a.event.patient_id != pid || !window.contains(a.created_at)) continue;
                (a.event.band == Band::Critical ? crit : warn)++;
                esc += a.renotify_count;
                exh += a.escalation_exhausted;
                if (a.acked_at) lat.push_back(*a.acked_at - a.created_at);
            }
            alerts_seen += warn + crit;
            EXPECT_EQ(c.alerts_warning, warn) << pid;
            EXPECT_EQ(c.alerts_critical, crit) << pid;
            EXPECT_EQ(c.escalations, esc) << pid;
            EXPECT_EQ(c.exhausted, exh) << pid;
            auto sorted = c.ack_latencies_ms;
            std::sort(sorted.begin(), sorted.end());
            std::sort(lat.begin(), lat.end());
            EXPECT_EQ(sorted, lat) << pid;
        }
        EXPECT_GT(alerts_seen, 0u);
        EXPECT_EQ(s.frame_metrics.at("frames_received"), 1500u * nodes.size());
        EXPECT_EQ(s.totals.alerts_total(), alerts_seen);
    }
}

TEST(Report, TornAlertLineIsIgnored) {
    test::TempDir dir;
    {
        auto db = test::seeded_store(dir.path());
        db->append_alert_log({5, 1, store::AlertLogEvent::Raised, 23, VitalKind::HeartRate, Band::Critical,
                              "cause=threshold"});
    }
    {
        std::ofstream out(dir.path() / "alerts.log", std::ios::app);
        out << "9\t2\tRaised\t24";
    }
    auto s = report::summarize(dir.path());
    EXPECT_EQ(s.totals.alerts_critical, 1u);
    EXPECT_EQ(s.totals.alerts_warning, 0u);
}

}  // namespace
