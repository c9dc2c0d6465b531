// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "support.hpp"

#include "ehc/commands.hpp"
#include "ehc/gateway.hpp"
#include "ehc/http_api.hpp"
#include "ehc/simulator.hpp"
#include "ehc/udp_listener.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

using namespace ehc;
using Clk = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

double seconds_since(Clk::time_point t) { return std::chrono::duration<double>(Clk::now() - t).count(); }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. Codec soundness.
Outcome codec_round_trip() {
    std::mt19937_64 rng(20240601);
    const auto start = Clk::now();
    int ok = 0;
    for (int i = 0; i < 10000; ++i) {
        auto p = test::random_packet(rng);
        ok += protocol::decode_packet(protocol::encode_packet(p)) == p;
    }
    const double s = seconds_since(start);
    return {ok == 10000 && s < 5.0, std::to_string(ok) + "/10000 identical in " + fmt("%.3f s", s)};
}

// 2. Corruption detection.
Outcome bit_flip_detection() {
    std::mt19937_64 rng(424242);
    std::uint64_t flips = 0, detected = 0;
    for (int i = 0; i < 100; ++i) {
        const auto f = protocol::encode_packet(test::random_packet(rng));
        for (std::size_t bit = 0; bit < f.size() * 8; ++bit) {
            auto g = f;
            g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            ++flips;
            try {
                protocol::decode_packet(g);
            } catch (const protocol::DecodeError&) {
                ++detected;
            }
        }
    }
    return {flips > 0 && detected == flips, std::to_string(detected) + "/" + std::to_string(flips) + " flips detected"};
}

// Bitwise CRC-16/CCITT-FALSE and frame field reader for the delivery-log oracle.
std::uint16_t crc_bitwise(const std::vector<std::uint8_t>& d, std::size_t n) {
    std::uint16_t crc = 0xFFFF;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= static_cast<std::uint16_t>(d[i] << 8);
        for (int b = 0; b < 8; ++b) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : crc << 1;
    }
    return crc;
}

using Key = std::tuple<int, int, int>;  // node, seq, kind code

std::set<Key> oracle_from_log(const std::string& log) {
    std::set<Key> out;
    std::istringstream in(log);
    for (std::string line; std::getline(in, line);) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        const std::string hex = line.substr(tab + 1);
        std::vector<std::uint8_t> f;
        for (std::size_t i = 0; i + 1 < hex.size(); i += 2) f.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
        if (f.size() < 18) continue;
        const std::size_t n = f[15];
        if (f.size() != 18 + 3 * n) continue;
        if (crc_bitwise(f, f.size() - 2) != ((f[f.size() - 2] << 8) | f.back())) continue;
        const int node = (f[3] << 8) | f[4];
        const int seq = (f[5] << 8) | f[6];
        for (std::size_t i = 0; i < n; ++i) out.insert({node, seq, f[16 + 3 * i]});
    }
    return out;
}

// 3. Exactly-once storage.
Outcome exactly_once() {
    sim::Scenario sc;
    sc.duration_s = 600;
    sc.seed = 31337;
    sc.start_epoch_ms = 1717200000000;
    for (NodeId id : {23, 24, 25, 27, 28}) sc.nodes.push_back(sim::NodeProfile::with_defaults(id, id));
    // Delay spread stays well inside the 64-sequence duplicate window.
    sc.impairment = {0.2, 0.5, 5, 2000, 99};

    auto delivered = sim::apply_impairment(sim::encode_stream(sim::run_fleet(sc)), sc.impairment);
    const auto log = sim::format_delivery_log(delivered);

    test::TempDir dir("ehc-accept3");
    auto db = test::seeded_store(dir.path());
    SimulatedClock clock(sc.start_epoch_ms);
    Gateway gw(GatewayConfig{}, *db, kb::default_knowledge_base(), clock);
    for (const auto& f : delivered) {
        clock.set(f.time_ms);
        gw.ingest(f.frame, f.time_ms);
    }

    std::set<Key> stored;
    std::size_t rows = 0;
    for (NodeId id : {23, 24, 25, 27, 28}) {
        for (const auto& r : db->query_readings(id)) {
            ++rows;
            stored.insert({r.node_id, r.seq, wire_code(r.kind)});
        }
    }
    const auto expected = oracle_from_log(log);
    const bool ok = rows == stored.size() && stored == expected && delivered.size() > 3000 * 0.8;
    return {ok, std::to_string(delivered.size()) + " deliveries, " + std::to_string(expected.size()) +
                    " unique readings expected, " + std::to_string(rows) + " stored rows, " +
                    std::to_string(stored.size()) + " distinct"};
}

// 4. End-to-end ward scenario.
Outcome ward_fever() {
    test::TempDir dir("ehc-accept4");
    const auto scenario_path = test::fixture("ward5_fever.scenario");
    const auto sc = sim::load_scenario_file(scenario_path.string());
    const TimestampMs onset = sc.start_epoch_ms + static_cast<TimestampMs>(sc.events.at(0).plateau_start_s() * 1000);

    std::vector<std::string> logs;
    double slowest = 0;
    std::string why;
    bool ok = true;
    for (const char* run : {"run1", "run2"}) {
        cli::SimulateOptions o;
        o.scenario = scenario_path;
        o.speed = 1000;
        o.store = dir / run;
        o.kb = test::fixture("default_kb.txt");
        o.patients = test::fixture("fig5_patients.tsv");
        o.notify_log = dir / (std::string(run) + "-notify.tsv");
        o.quiet = true;
        std::ostringstream out, err;
        const auto start = Clk::now();
        const int code = cli::cmd_simulate(o, out, err);
        slowest = std::max(slowest, seconds_since(start));
        if (code != 0) return {false, "simulate exited " + std::to_string(code) + ": " + err.str()};
        logs.push_back(store::read_file(dir / run / "alerts.log"));

        std::vector<store::AlertLogEntry> raised;
        std::set<std::string> first_round_roles;
        std::istringstream in(logs.back());
        for (std::string line; std::getline(in, line);) {
            auto e = store::parse_alert_line(line);
            if (e.event == store::AlertLogEvent::Raised) raised.push_back(e);
            if (e.event == store::AlertLogEvent::Notified && e.detail.find("attempt=1") != std::string::npos) {
                first_round_roles.insert(e.detail.substr(5, e.detail.find(' ') - 5));
            }
        }
        if (raised.size() != 1) {
            ok = false;
            why = std::to_string(raised.size()) + " alerts raised";
            continue;
        }
        const auto& a = raised[0];
        const auto pos = a.detail.find("reading_ts=");
        const TimestampMs reading_ts = std::stoull(a.detail.substr(pos + 11));
        const bool timely = reading_ts >= onset && reading_ts - onset <= 3 * 1000;
        // Both sinks received the first round.
        const auto notify = store::read_file(*o.notify_log);
        const bool sinks = notify.find("\tNurse\t1\t23\t") != std::string::npos &&
                           notify.find("\tPhysician\t1\t23\t") != std::string::npos;
        const bool right = a.patient_id == 23 && a.kind == VitalKind::BodyTemperature && a.band == Band::Critical;
        if (!(right && timely && sinks && first_round_roles == std::set<std::string>{"Nurse", "Physician"})) {
            ok = false;
            why = "alert " + store::format_alert_line(a) + " onset " + std::to_string(onset);
        }
        why = why.empty() ? "raised " + std::to_string(reading_ts - onset) + " ms after plateau onset" : why;
    }
    const bool same = logs.size() == 2 && logs[0] == logs[1];
    ok = ok && same && slowest < 10.0;
    return {ok, "1 Critical BT alert for patient 23, " + why + "; alert logs " + (same ? "identical" : "differ") +
                    "; slowest run " + fmt("%.2f s", slowest)};
}

// 5. Debounce oracle.
std::string engine_trace(const std::string& trace, const kb::KnowledgeBase& kb) {
    engine::PatientVitalState st;
    std::string out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Band b = trace[i] == 'C' ? Band::Critical : trace[i] == 'W' ? Band::Warning : Band::Normal;
        auto ev = engine::update_state(st, 1, {VitalKind::HeartRate, 1000 * i, 700, b}, kb);
        out += !ev ? '.' : std::holds_alternative<engine::AlertEvent>(*ev) ? 'R' : 'X';
    }
    return out;
}

std::string reference_trace(const std::string& t, const kb::DebounceConfig& d) {
    std::string out;
    bool active = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
        auto run = [&](auto pred) {
            int n = 0;
            for (std::size_t j = i + 1; j-- > 0 && pred(t[j]);) ++n;
            return n;
        };
        char c = '.';
        if (!active && (run([](char x) { return x == 'C'; }) >= d.n_critical_raise ||
                        run([](char x) { return x != 'N'; }) >= d.n_warning_raise)) {
            active = true;
            c = 'R';
        } else if (active && run([](char x) { return x == 'N'; }) >= d.m_clear) {
            active = false;
            c = 'X';
        }
        out += c;
    }
    return out;
}

Outcome debounce_oracle() {
    auto kb = kb::default_knowledge_base();
    for (auto& t : kb.trends) t.reset();
    int cases = 0, same = 0;
    for (int len = 1; len <= 8; ++len) {
        int total = 1;
        for (int i = 0; i < len; ++i) total *= 3;
        for (int code = 0; code < total; ++code) {
            std::string t;
            for (int i = 0, c = code; i < len; ++i, c /= 3) t += "NWC"[c % 3];
            ++cases;
            same += engine_trace(t, kb) == reference_trace(t, kb.debounce);
        }
    }
    return {same == cases && cases == 9840, std::to_string(same) + "/" + std::to_string(cases) +
                                                 " sequences of length 1..8 identical (6561 of length 8)"};
}

// 6. KB validation oracle.
Outcome kb_oracle() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(1000003);
    int agree = 0, accepted = 0;
    const int rounds = 1000;
    for (int round = 0; round < rounds; ++round) {
        std::set<int> cuts;
        const int n = 1 + static_cast<int>(rng() % 5);
        while (static_cast<int>(cuts.size()) < n) cuts.insert(static_cast<int>(rng() % 3600) - 600);
        std::vector<double> bp;
        for (int c : cuts) bp.push_back(from_x10(c));
        kb::ProposedBandTable t;
        for (std::size_t i = 0; i <= bp.size(); ++i) {
            t.intervals.push_back({i == 0 ? -inf : bp[i - 1], i == bp.size() ? inf : bp[i], static_cast<Band>(rng() % 3)});
        }
        if (rng() % 2) {
            auto& iv = t.intervals[rng() % t.intervals.size()];
            switch (rng() % 4) {
                case 0: iv.lo += from_x10(static_cast<int>(rng() % 5) - 2); break;
                case 1: iv.hi += from_x10(static_cast<int>(rng() % 5) - 2); break;
                case 2: t.intervals.erase(t.intervals.begin() + static_cast<long>(rng() % t.intervals.size())); break;
                default: t.intervals.push_back(t.intervals[rng() % t.intervals.size()]); break;
            }
        }
        bool exact = !t.intervals.empty();
        for (std::int32_t v = kMinValueX10; v <= kMaxValueX10 && exact; ++v) {
            int hits = 0;
            for (const auto& iv : t.intervals) hits += iv.lo <= from_x10(v) && from_x10(v) < iv.hi;
            exact = hits == 1;
        }
        const bool ok = kb::validate_band_table(t).empty();
        agree += ok == exact;
        accepted += ok;
    }
    return {agree == rounds && accepted > 0 && accepted < rounds,
            std::to_string(agree) + "/" + std::to_string(rounds) + " verdicts match brute force (" +
                std::to_string(accepted) + " valid tables)"};
}

// 7. Escalation timing.
Outcome escalation() {
    constexpr TimestampMs t0 = 1717200000000;
    auto run = [&](std::optional<TimestampMs> ack_at, std::vector<TimestampMs>& rounds, bool& exhausted) {
        test::TempDir dir("ehc-accept7");
        auto db = test::seeded_store(dir.path());
        SimulatedClock clock(t0);
        Gateway gw(GatewayConfig{}, *db, kb::default_knowledge_base(), clock);
        auto r = gw.ingest(protocol::encode_packet({23, 1, t0, {{VitalKind::HeartRate, 1300}}}), t0);
        if (r.raised_alerts.size() != 1) return false;
        for (TimestampMs t = t0; t <= t0 + 1800000; t += 1000) {
            clock.set(t);
            if (ack_at && t == t0 + *ack_at) gw.ack_alert(r.raised_alerts[0], "nina", notify::Role::Nurse);
            for (const auto& m : gw.escalate(t)) {
                if (m.role == notify::Role::Nurse) rounds.push_back(m.emitted_at - t0);
            }
        }
        exhausted = gw.alert(r.raised_alerts[0])->escalation_exhausted;
        return true;
    };
    std::vector<TimestampMs> unacked, acked;
    bool ex1 = false, ex2 = false;
    if (!run(std::nullopt, unacked, ex1) || !run(60000, acked, ex2)) return {false, "no alert raised"};
    const std::vector<TimestampMs> want{120000, 240000, 360000, 480000, 600000};
    std::string got;
    for (auto t : unacked) got += std::to_string(t / 1000) + "s ";
    return {unacked == want && ex1 && acked.empty() && !ex2,
            "unacked rounds at " + got + (ex1 ? "then exhausted" : "not exhausted") + "; acked at 60 s: " +
                std::to_string(acked.size()) + " renotifications"};
}

// 8. Seed table reproduction.
Outcome seed_table() {
    test::TempDir dir("ehc-accept8");
    std::vector<store::PatientRecord> before, after;
    std::optional<store::PatientRecord> p23;
    {
        auto db = test::seeded_store(dir.path());
        before = db->find_patients(std::nullopt, std::nullopt);
        auto hit = db->find_patients(std::nullopt, 23);
        if (hit.size() == 1) p23 = hit[0];
    }
    auto db = store::PatientStore::open(dir.path(), false);
    after = db->find_patients(std::nullopt, std::nullopt);
    const bool ok = before.size() == 5 && p23 && p23->last_name == "Khalid" && p23->first_name == "Suliman" &&
                    before == after && db->find_patients(std::nullopt, 23) == std::vector{*p23};
    return {ok, std::to_string(before.size()) + " records; id 23 -> " +
                    (p23 ? p23->last_name + "/" + p23->first_name : std::string("none")) +
                    "; reopen " + (before == after ? "identical" : "differs")};
}

// 9. Desk-scale throughput over UDP and the HTTP stream.
Outcome throughput() {
    constexpr int kNodes = 50;
    constexpr int kSeconds = 60;
    test::TempDir dir("ehc-accept9");
    auto db = store::PatientStore::open(dir.path(), true);
    for (int i = 1; i <= kNodes; ++i) {
        store::PatientRecord p;
        p.id = i;
        p.last_name = "Bed" + std::to_string(i);
        p.first_name = "Resident";
        db->upsert_patient(p);
    }
    SystemClock clock;
    Gateway gw(GatewayConfig{}, *db, kb::default_knowledge_base(), clock);
    ApiServer api(gw);
    const int http_port = api.bind("127.0.0.1", 0);
    api.start();
    UdpListener udp(gw);
    const int udp_port = udp.bind("127.0.0.1", 0);
    udp.start();

    using Ms = std::chrono::duration<double, std::milli>;
    std::mutex mu;
    std::map<std::pair<int, int>, Clk::time_point> sent, seen;

    httplib::Client client("127.0.0.1", http_port);
    client.set_read_timeout(kSeconds + 30, 0);
    std::atomic<bool> done{false};
    std::thread reader([&] {
        std::string buf;
        client.Get("/stream", [&](const char* data, std::size_t n) {
            const auto now = Clk::now();
            buf.append(data, n);
            for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
                auto j = nlohmann::json::parse(buf.substr(0, nl));
                buf.erase(0, nl + 1);
                if (j["type"] != "ReadingStored") continue;
                std::lock_guard lock(mu);
                seen.emplace(std::make_pair(j["data"]["node_id"].get<int>(), j["data"]["seq"].get<int>()), now);
            }
            return !done.load();
        });
    });
    for (int i = 0; i < 200 && gw.events().subscriber_count() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

    sim::Scenario sc;
    sc.duration_s = kSeconds;
    sc.seed = 9;
    for (int i = 1; i <= kNodes; ++i) sc.nodes.push_back(sim::NodeProfile::with_defaults(static_cast<NodeId>(i), i));
    const auto emissions = sim::run_fleet(sc);

    UdpSender sender("127.0.0.1", udp_port);
    const auto start = Clk::now();
    for (const auto& e : emissions) {
        // Nodes are spread evenly across each second.
        const auto offset = std::chrono::milliseconds(e.send_time_ms + (e.packet.node_id - 1) * (1000 / kNodes));
        std::this_thread::sleep_until(start + offset);
        const auto frame = protocol::encode_packet(e.packet);
        {
            std::lock_guard lock(mu);
            sent[{e.packet.node_id, e.packet.seq}] = Clk::now();
        }
        sender.send(frame);
    }
    const double elapsed = seconds_since(start);
    std::this_thread::sleep_for(std::chrono::seconds(1));
    done = true;
    gw.ingest(protocol::encode_packet({1, 60000, 0, {{VitalKind::HeartRate, 700}}}), 0);  // wake the reader
    api.stop();
    reader.join();
    udp.stop();

    std::vector<double> lat;
    {
        std::lock_guard lock(mu);
        for (const auto& [k, t] : sent) {
            auto it = seen.find(k);
            if (it != seen.end()) lat.push_back(Ms(it->second - t).count());
        }
    }
    if (lat.empty()) return {false, "no stream events received"};
    std::sort(lat.begin(), lat.end());
    const double median = lat.size() % 2 ? lat[lat.size() / 2] : (lat[lat.size() / 2 - 1] + lat[lat.size() / 2]) / 2;
    const double p99 = lat[std::min(lat.size() - 1, lat.size() * 99 / 100)];
    const bool ok = median < 100.0 && lat.size() >= sent.size() * 99 / 100 && elapsed >= kSeconds - 1;
    return {ok, std::to_string(sent.size()) + " frames over " + fmt("%.1f s", elapsed) + ", " +
                    std::to_string(lat.size()) + " seen on stream, median " + fmt("%.2f ms", median) + ", p99 " +
                    fmt("%.2f ms", p99)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"codec round-trip", codec_round_trip},
        {"single-bit corruption detection", bit_flip_detection},
        {"exactly-once storage", exactly_once},
        {"ward fever scenario end to end", ward_fever},
        {"debounce oracle equivalence", debounce_oracle},
        {"knowledge-base validation oracle", kb_oracle},
        {"escalation timing", escalation},
        {"seed patient table", seed_table},
        {"desk-scale throughput", throughput},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
