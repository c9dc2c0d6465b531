#include "ehc/http_api.hpp"

#include "ehc/dates.hpp"
#include "ehc/json_codec.hpp"

#include <httplib.h>
#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <thread>

namespace ehc {

namespace jc = ehc::json;
using Json = nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

template <class T>
std::optional<T> parse_int(const std::string& s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

struct HttpError {
    int status;
    std::string message;
    std::vector<std::string> violations;
};

void send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const HttpError& e) {
    Json body = {{"error", e.message}};
    if (!e.violations.empty()) body["violations"] = e.violations;
    send(res, e.status, body);
}

Json parse_body(const httplib::Request& req) {
    try {
        return Json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw HttpError{400, "malformed JSON body", {e.what()}};
    }
}

PatientId path_id(const httplib::Request& req) {
    auto id = parse_int<PatientId>(req.matches[1]);
    if (!id) throw HttpError{400, "bad patient id", {}};
    return *id;
}

std::optional<notify::Role> header_role(const httplib::Request& req, bool required) {
    if (!req.has_header("X-Role")) {
        if (required) throw HttpError{400, "X-Role header required (nurse|physician)", {}};
        return std::nullopt;
    }
    auto role = notify::parse_role(req.get_header_value("X-Role"));
    if (!role) throw HttpError{400, "X-Role must be nurse or physician", {}};
    return role;
}

void require_physician(const httplib::Request& req) {
    if (header_role(req, true) != notify::Role::Physician) {
        throw HttpError{403, "physician role required", {}};
    }
}

std::string required_text(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty()) {
        throw HttpError{400, "validation failed", {std::string(key) + ": required non-empty string"}};
    }
    return body[key].get<std::string>();
}

std::optional<store::EntryCategory> category_of(const std::string& seg) {
    if (seg == "history") return store::EntryCategory::History;
    if (seg == "medications") return store::EntryCategory::Medication;
    if (seg == "conditions") return store::EntryCategory::Condition;
    return std::nullopt;
}

}  // namespace

struct ApiServer::Impl {
    explicit Impl(Gateway& g) : gw(g) {}

    Gateway& gw;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> stopping{false};
    int bound_port{-1};

    store::PatientStore& db() { return gw.store(); }

    void require_patient(PatientId id) {
        if (!db().has_patient(id)) throw HttpError{404, "unknown patient " + std::to_string(id), {}};
    }

    // Maps library exceptions to HTTP statuses.
    template <class F>
    httplib::Server::Handler wrap(F f) {
        return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                send_error(res, e);
            } catch (const ValidationError& e) {
                send_error(res, {400, "validation failed", e.violations()});
            } catch (const NotFoundError& e) {
                send_error(res, {404, e.what(), {}});
            } catch (const ConflictError& e) {
                send_error(res, {409, e.what(), {}});
            } catch (const std::exception& e) {
                send_error(res, {500, e.what(), {}});
            }
        };
    }

    void routes() {
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type, X-Role, X-User"},
                                    {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"}});
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Get("/patients", wrap([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> name;
            std::optional<PatientId> id;
            if (req.has_param("name") && !req.get_param_value("name").empty()) name = req.get_param_value("name");
            if (req.has_param("id") && !req.get_param_value("id").empty()) {
                id = parse_int<PatientId>(req.get_param_value("id"));
                if (!id) throw HttpError{400, "id must be an integer", {}};
            }
            auto found = db().find_patients(name ? std::optional<std::string_view>(*name) : std::nullopt, id);
            Json list = Json::array();
            for (const auto& p : found) list.push_back(jc::to_json(p));
            send(res, 200,
                 {{"count", found.size()},
                  {"message", std::to_string(found.size()) + " record(s) found."},
                  {"patients", list}});
        }));

        server.Get(R"(/patients/(-?\d+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            auto p = db().get_patient(id);
            if (!p) throw HttpError{404, "unknown patient " + std::to_string(id), {}};
            send(res, 200, jc::to_json(*p));
        }));

        server.Put(R"(/patients/(-?\d+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            const bool existed = db().has_patient(id);
            auto stored = db().upsert_patient(jc::patient_from_json(parse_body(req), id));
            send(res, existed ? 200 : 201, jc::to_json(stored));
        }));

        server.Get(R"(/patients/(-?\d+)/readings)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            require_patient(id);
            store::ReadingQuery q;
            std::vector<std::string> errs;
            auto ts = [&](const char* key, std::optional<TimestampMs>& out) {
                if (!req.has_param(key)) return;
                out = parse_int<TimestampMs>(req.get_param_value(key));
                if (!out) errs.push_back(std::string(key) + ": expected epoch milliseconds");
            };
            ts("from", q.from);
            ts("to", q.to);
            if (req.has_param("kind")) {
                q.kind = parse_vital_kind(req.get_param_value("kind"));
                if (!q.kind) errs.push_back("kind: unknown vital kind");
            }
            if (req.has_param("band")) {
                auto b = store::parse_band_filter(req.get_param_value("band"));
                if (!b) errs.push_back("band: expected all, normal or abnormal");
                else q.band = *b;
            }
            if (!errs.empty()) throw ValidationError(std::move(errs));
            Json list = Json::array();
            for (const auto& r : db().query_readings(id, q)) list.push_back(jc::to_json(r));
            send(res, 200, {{"patient_id", id}, {"count", list.size()}, {"readings", list}});
        }));

        server.Get(R"(/patients/(-?\d+)/detail)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            auto p = db().get_patient(id);
            if (!p) throw HttpError{404, "unknown patient " + std::to_string(id), {}};
            auto last = db().last_update(id);
            Json latest = Json::object();
            for (auto k : kAllVitalKinds) {
                store::ReadingQuery q;
                q.kind = k;
                auto rs = db().query_readings(id, q);
                if (!rs.empty()) latest[std::string(to_string(k))] = jc::to_json(rs.back());
            }
            auto list = [](const auto& items) {
                Json a = Json::array();
                for (const auto& i : items) a.push_back(jc::to_json(i));
                return a;
            };
            send(res, 200,
                 {{"patient", jc::to_json(*p)},
                  {"last_update", last ? Json(*last) : Json(nullptr)},
                  {"last_update_iso", last ? Json(format_iso_timestamp(*last)) : Json(nullptr)},
                  {"latest", latest},
                  {"notes", list(db().notes(id))},
                  {"prescriptions", list(db().prescriptions(id))},
                  {"history", list(db().entries(id, store::EntryCategory::History))},
                  {"medications", list(db().entries(id, store::EntryCategory::Medication))},
                  {"conditions", list(db().entries(id, store::EntryCategory::Condition))}});
        }));

        server.Post(R"(/patients/(-?\d+)/prescriptions)",
                    wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const PatientId id = path_id(req);
                        require_physician(req);
                        require_patient(id);
                        Json body = parse_body(req);
                        auto reg = required_text(body, "physician_registration_number");
                        auto text = required_text(body, "text");
                        auto rx = db().add_prescription(id, reg, text, gw.clock().now_ms());
                        send(res, 201, jc::to_json(rx));
                    }));

        const char* entry_route = R"(/patients/(-?\d+)/(history|medications|conditions))";
        server.Get(entry_route, wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            require_patient(id);
            Json list = Json::array();
            for (const auto& e : db().entries(id, *category_of(req.matches[2]))) list.push_back(jc::to_json(e));
            send(res, 200, {{"patient_id", id}, {"entries", list}});
        }));
        server.Post(entry_route, wrap([this](const httplib::Request& req, httplib::Response& res) {
            const PatientId id = path_id(req);
            require_patient(id);
            auto text = required_text(parse_body(req), "text");
            auto e = db().add_entry(id, *category_of(req.matches[2]), text, gw.clock().now_ms());
            send(res, 201, jc::to_json(e));
        }));

        server.Get("/alerts", wrap([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<AlertState> state;
            if (req.has_param("state") && !req.get_param_value("state").empty()) {
                state = parse_alert_state(req.get_param_value("state"));
                if (!state) throw HttpError{400, "state must be open, acked or closed", {}};
            }
            Json list = Json::array();
            for (const auto& a : gw.alerts(state)) list.push_back(jc::to_json(a));
            send(res, 200, {{"count", list.size()}, {"alerts", list}});
        }));

        server.Post(R"(/alerts/(\d+)/ack)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto id = parse_int<std::uint64_t>(req.matches[1]);
            if (!id) throw HttpError{400, "bad alert id", {}};
            auto role = *header_role(req, true);
            std::string user = req.get_header_value("X-User");
            if (!req.body.empty()) {
                Json body = parse_body(req);
                if (body.is_object() && body.contains("user") && body["user"].is_string()) {
                    user = body["user"].get<std::string>();
                }
            }
            if (user.empty()) user = std::string(notify::to_string(role));
            send(res, 200, jc::to_json(gw.ack_alert(*id, user, role)));
        }));

        server.Get("/kb", wrap([this](const httplib::Request&, httplib::Response& res) {
            send(res, 200, jc::to_json(gw.knowledge_base()));
        }));

        server.Put("/kb", wrap([this](const httplib::Request& req, httplib::Response& res) {
            require_physician(req);
            Json body = parse_body(req);
            std::string author = req.get_header_value("X-User");
            if (author.empty() && body.is_object() && body.contains("author") && body["author"].is_string()) {
                author = body["author"].get<std::string>();
            }
            if (author.empty()) author = "physician";
            send(res, 200, jc::to_json(gw.update_kb(jc::proposal_from_json(body), author)));
        }));

        server.Get("/metrics", wrap([this](const httplib::Request&, httplib::Response& res) {
            Json m = gw.metrics();
            m["readings_in_store"] = db().reading_count();
            m["stream_subscribers"] = gw.events().subscriber_count();
            send(res, 200, m);
        }));

        server.Get("/stream", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto sub = gw.events().subscribe(header_role(req, false));
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "application/x-ndjson",
                [this, sub](std::size_t, httplib::DataSink& sink) {
                    while (!stopping.load()) {
                        if (!sink.is_writable()) return false;
                        auto ev = sub->next(std::chrono::milliseconds(200));
                        if (!ev) continue;
                        std::string line = jc::to_json(*ev).dump();
                        line += '\n';
                        if (!sink.write(line.data(), line.size())) return false;
                        return true;
                    }
                    sink.done();
                    return true;
                },
                [this, sub](bool) { gw.events().unsubscribe(sub); });
        }));
    }
};

ApiServer::ApiServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) { impl_->routes(); }

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(host);
    } else {
        impl_->bound_port = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->bound_port < 0) {
        throw Error("cannot bind HTTP server to " + host + ":" + std::to_string(port));
    }
    return impl_->bound_port;
}

void ApiServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->stopping = true;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const noexcept { return impl_->bound_port; }

}  // namespace ehc
