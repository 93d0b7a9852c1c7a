#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "eipl/grader.hpp"

namespace httplib {
class Server;
}

namespace eipl {

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

/// Student-facing view of a graded attempt: verdict, generated code and
/// per-test expected/actual values. Arguments, reference source and the
/// vector suite are never included.
nlohmann::json attempt_view(const GradeAttempt& a, int attempts_remaining, int attempt_cap);

/// HTTP front end over a Grader.
///
///   GET  /api/questions
///   POST /api/sessions
///   POST /api/sessions/{sid}/questions/{qid}/attempts
///   GET  /api/sessions/{sid}/progress
///
/// Anything else is served from the static directory when one is set.
class Service {
public:
    explicit Service(std::shared_ptr<Grader> grader,
                     std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Transport-independent dispatch, used by the HTTP server and tests.
    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

    /// Binds and serves until stop(). `port` 0 picks a free port; the bound
    /// port is passed to `on_ready` before requests are accepted. Returns
    /// false if binding failed.
    bool serve(const std::string& host, int port, const std::function<void(int)>& on_ready = {});
    void stop();

private:
    ApiResponse list_questions() const;
    ApiResponse create_session() const;
    ApiResponse submit(const std::string& sid, const std::string& qid, const std::string& body) const;
    ApiResponse progress(const std::string& sid) const;

    std::shared_ptr<Grader> grader_;
    std::optional<std::filesystem::path> static_dir_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace eipl
