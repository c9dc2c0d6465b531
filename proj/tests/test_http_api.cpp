#include "support.hpp"

#include "ehc/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

#include <gtest/gtest.h>

#include <future>

using namespace ehc;
using Json = nlohmann::json;

namespace {

constexpr TimestampMs kT0 = 1717200000000;

struct Server {
    test::TempDir dir;
    std::unique_ptr<store::PatientStore> db = test::seeded_store(dir.path());
    SimulatedClock clock{kT0};
    Gateway gw{GatewayConfig{}, *db, kb::default_knowledge_base(), clock};
    ApiServer api{gw};
    std::unique_ptr<httplib::Client> client;

    Server() {
        const int port = api.bind("127.0.0.1", 0);
        api.start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(5, 0);
    }
    ~Server() { api.stop(); }

    httplib::Result get(const std::string& path, httplib::Headers h = {}) { return client->Get(path, h); }
    httplib::Result put(const std::string& path, const Json& body, httplib::Headers h = {}) {
        return client->Put(path, h, body.dump(), "application/json");
    }
    httplib::Result post(const std::string& path, const Json& body, httplib::Headers h = {}) {
        return client->Post(path, h, body.dump(), "application/json");
    }

    void ingest_hr(NodeId node, std::uint16_t seq, double bpm) {
        gw.ingest(protocol::encode_packet({node, seq, kT0 + 1000ull * seq, {{VitalKind::HeartRate, to_x10(bpm)}}}),
                  clock.now_ms());
    }
};

const httplib::Headers kPhysician{{"X-Role", "physician"}, {"X-User", "dr-amal"}};
const httplib::Headers kNurse{{"X-Role", "nurse"}, {"X-User", "nina"}};

TEST(Patients, SearchById) {
    Server s;
    auto r = s.get("/patients?id=23");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
    auto j = Json::parse(r->body);
    EXPECT_EQ(j["count"], 1);
    EXPECT_EQ(j["message"], "1 record(s) found.");
    EXPECT_EQ(j["patients"][0]["last_name"], "Khalid");
    EXPECT_EQ(j["patients"][0]["date_of_birth"], "1949-12-02");
}

TEST(Patients, SearchAllAndByName) {
    Server s;
    EXPECT_EQ(Json::parse(s.get("/patients")->body)["message"], "5 record(s) found.");
    auto j = Json::parse(s.get("/patients?name=ali")->body);
    EXPECT_EQ(j["count"], 2);
    EXPECT_EQ(Json::parse(s.get("/patients?id=999")->body)["message"], "0 record(s) found.");
    EXPECT_EQ(s.get("/patients?id=abc")->status, 400);
}

TEST(Patients, GetPutAndValidation) {
    Server s;
    EXPECT_EQ(s.get("/patients/404")->status, 404);
    auto j = Json::parse(s.get("/patients/24")->body);
    j["address"] = "7 Palm Road";
    auto r = s.put("/patients/24", j);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(s.db->get_patient(24)->address, "7 Palm Road");

    Json fresh = {{"id", 40}, {"last_name", "Nasser"}, {"first_name", "Huda"}, {"date_of_birth", "1950-03-04"}};
    EXPECT_EQ(s.put("/patients/40", fresh)->status, 201);

    Json bad = fresh;
    bad["last_name"] = "";
    bad["date_of_birth"] = "1950-13-04";
    r = s.put("/patients/40", bad);
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(Json::parse(r->body)["violations"].size(), 2u);

    Json mismatch = fresh;
    mismatch["id"] = 41;
    EXPECT_EQ(s.put("/patients/40", mismatch)->status, 400);
    EXPECT_EQ(s.client->Put("/patients/40", "{nope", "application/json")->status, 400);
}

TEST(Readings, FiltersAndErrors) {
    Server s;
    s.ingest_hr(23, 1, 72);
    s.ingest_hr(23, 2, 130);
    s.ingest_hr(23, 3, 74);
    auto j = Json::parse(s.get("/patients/23/readings")->body);
    EXPECT_EQ(j["count"], 3);
    EXPECT_EQ(j["readings"][1]["band"], "Critical");
    EXPECT_EQ(j["readings"][1]["value"], 130.0);
    EXPECT_EQ(Json::parse(s.get("/patients/23/readings?band=abnormal")->body)["count"], 1);
    auto from = std::to_string(kT0 + 2000);
    EXPECT_EQ(Json::parse(s.get("/patients/23/readings?from=" + from)->body)["count"], 2);
    EXPECT_EQ(Json::parse(s.get("/patients/23/readings?kind=SystolicBP")->body)["count"], 0);
    auto r = s.get("/patients/23/readings?kind=Pulse&from=x");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(Json::parse(r->body)["violations"].size(), 2u);
    EXPECT_EQ(s.get("/patients/99/readings")->status, 404);
}

TEST(Detail, PrescriptionShowsUp) {
    Server s;
    s.ingest_hr(25, 1, 130);
    Json rx = {{"physician_registration_number", "SA-7781"}, {"text", "Aspirin 81 mg daily"}};
    EXPECT_EQ(s.post("/patients/25/prescriptions", rx, kNurse)->status, 403);
    EXPECT_EQ(s.post("/patients/25/prescriptions", rx)->status, 400);
    EXPECT_EQ(s.post("/patients/25/prescriptions", {{"text", "x"}}, kPhysician)->status, 400);
    EXPECT_EQ(s.post("/patients/99/prescriptions", rx, kPhysician)->status, 404);
    ASSERT_EQ(s.post("/patients/25/prescriptions", rx, kPhysician)->status, 201);
    EXPECT_EQ(s.post("/patients/25/conditions", {{"text", "Type 2 diabetes"}})->status, 201);

    auto j = Json::parse(s.get("/patients/25/detail")->body);
    EXPECT_EQ(j["patient"]["first_name"], "Ammar");
    EXPECT_EQ(j["prescriptions"].size(), 1u);
    EXPECT_EQ(j["prescriptions"][0]["text"], "Aspirin 81 mg daily");
    EXPECT_EQ(j["conditions"][0]["text"], "Type 2 diabetes");
    EXPECT_EQ(j["last_update"], kT0 + 1000);
    EXPECT_EQ(j["latest"]["HeartRate"]["band"], "Critical");
    EXPECT_EQ(j["notes"].size(), 1u);
    EXPECT_EQ(Json::parse(s.get("/patients/25/conditions")->body)["entries"].size(), 1u);
}

TEST(Alerts, ListAndAck) {
    Server s;
    s.ingest_hr(23, 1, 130);
    auto j = Json::parse(s.get("/alerts?state=open")->body);
    ASSERT_EQ(j["count"], 1);
    const auto id = j["alerts"][0]["alert_id"].get<std::uint64_t>();
    const auto path = "/alerts/" + std::to_string(id) + "/ack";

    EXPECT_EQ(s.post(path, Json::object())->status, 400);
    auto r = s.post(path, Json::object(), kNurse);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(Json::parse(r->body)["state"], "Acked");
    EXPECT_EQ(Json::parse(r->body)["acked_by"], "nina");
    EXPECT_EQ(s.post(path, Json::object(), kPhysician)->status, 200);
    EXPECT_EQ(Json::parse(s.get("/alerts?state=acked")->body)["count"], 1);
    EXPECT_EQ(s.post("/alerts/77/ack", Json::object(), kNurse)->status, 404);
    EXPECT_EQ(s.get("/alerts?state=bogus")->status, 400);
}

TEST(Kb, UpdateAndRejectOverlap) {
    Server s;
    auto kb = Json::parse(s.get("/kb")->body);
    EXPECT_EQ(kb["revision"], 1);
    Json hr;
    for (auto& t : kb["bands"]) {
        if (t["kind"] == "HeartRate") hr = t;
    }
    ASSERT_FALSE(hr.is_null());
    EXPECT_TRUE(hr["intervals"][0]["lo"].is_null());

    auto overlap = kb;
    for (auto& t : overlap["bands"]) {
        if (t["kind"] == "HeartRate") t["intervals"][2]["lo"] = 55;
    }
    EXPECT_EQ(s.put("/kb", overlap, kNurse)->status, 403);
    auto r = s.put("/kb", overlap, kPhysician);
    ASSERT_EQ(r->status, 400);
    auto body = Json::parse(r->body);
    ASSERT_EQ(body["violations"].size(), 1u);
    EXPECT_NE(body["violations"][0].get<std::string>().find("overlap"), std::string::npos);
    EXPECT_EQ(Json::parse(s.get("/kb")->body), kb);

    auto moved = kb;
    for (auto& t : moved["bands"]) {
        if (t["kind"] == "HeartRate") {
            t["intervals"][1]["hi"] = 55;
            t["intervals"][2]["lo"] = 55;
        }
    }
    r = s.put("/kb", moved, kPhysician);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(Json::parse(r->body)["revision"], 2);
    EXPECT_EQ(Json::parse(r->body)["author"], "dr-amal");
    EXPECT_EQ(s.db->load_kb()->revision, 2u);
}

TEST(Metrics, ReportsCounters) {
    Server s;
    s.ingest_hr(23, 1, 72);
    auto j = Json::parse(s.get("/metrics")->body);
    EXPECT_EQ(j["frames_received"], 1);
    EXPECT_EQ(j["readings_in_store"], 1);
}

TEST(Stream, DeliversCommittedReading) {
    Server s;
    httplib::Client c("127.0.0.1", s.api.port());
    c.set_read_timeout(5, 0);
    std::promise<std::string> first_line;
    std::thread reader([&] {
        std::string buf;
        bool done = false;
        c.Get("/stream", [&](const char* data, std::size_t n) {
            buf.append(data, n);
            auto nl = buf.find('\n');
            if (nl != std::string::npos && !done) {
                done = true;
                first_line.set_value(buf.substr(0, nl));
                return false;
            }
            return true;
        });
        if (!done) first_line.set_value("");
    });
    for (int i = 0; i < 100 && s.gw.events().subscriber_count() == 0; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ASSERT_EQ(s.gw.events().subscriber_count(), 1u);
    s.ingest_hr(27, 1, 72);
    auto fut = first_line.get_future();
    ASSERT_EQ(fut.wait_for(std::chrono::seconds(5)), std::future_status::ready);
    auto j = Json::parse(fut.get());
    reader.join();
    EXPECT_EQ(j["type"], "ReadingStored");
    EXPECT_EQ(j["patient_id"], 27);
    EXPECT_EQ(j["seq"], 1);
    EXPECT_EQ(j["data"]["value"], 72.0);
}

TEST(Server, PortInUseIsAnError) {
    Server s;
    SimulatedClock clock;
    ApiServer other(s.gw);
    EXPECT_THROW(other.bind("127.0.0.1", s.api.port()), Error);
}

}  // namespace
