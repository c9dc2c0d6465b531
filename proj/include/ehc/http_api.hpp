#pragma once

#include "ehc/gateway.hpp"

#include <memory>
#include <string>

namespace ehc {

/// HTTP + ndjson stream front end of a Gateway.
///
///   GET  /patients?name=&id=            search ("N record(s) found.")
///   GET  /patients/{id}                 PUT replaces the record
///   GET  /patients/{id}/readings?from=&to=&kind=&band=
///   GET  /patients/{id}/detail          record, last_update, notes, entries
///   POST /patients/{id}/prescriptions   physician only
///   GET|POST /patients/{id}/history|medications|conditions
///   GET  /alerts?state=                 POST /alerts/{id}/ack (X-Role)
///   GET  /kb                            PUT /kb (physician only)
///   GET  /metrics
///   GET  /stream                        one JSON event per line
///
/// Errors: 400 {error, violations}, 403 wrong role, 404 unknown entity,
/// 409 conflict.
class ApiServer {
public:
    explicit ApiServer(Gateway& gateway);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds without serving yet; port 0 picks a free port. Returns the
    /// bound port. Throws Error when the address is unavailable.
    int bind(const std::string& host, int port);
    /// Serves on a background thread.
    void start();
    /// Ends open streams and joins the server thread.
    void stop();
    int port() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ehc
