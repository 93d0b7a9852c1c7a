#include "eipl/service.hpp"

#include <regex>

#include <httplib.h>

namespace eipl {

using nlohmann::json;

namespace {

ApiResponse reply(int status, const json& j) { return {status, j.dump()}; }

ApiResponse error(int status, const std::string& kind, const std::string& message) {
    return reply(status, json{{"error", kind}, {"message", message}});
}

int status_for(GraderError::Kind k) {
    switch (k) {
        case GraderError::Kind::UnknownQuestion:
        case GraderError::Kind::UnknownSession: return 404;
        case GraderError::Kind::EmptyResponse: return 422;
        case GraderError::Kind::BackendUnavailable:
        case GraderError::Kind::Storage: return 503;
        case GraderError::Kind::Internal: return 500;
    }
    return 500;
}

std::string kind_name(GraderError::Kind k) {
    switch (k) {
        case GraderError::Kind::UnknownQuestion: return "UnknownQuestion";
        case GraderError::Kind::UnknownSession: return "UnknownSession";
        case GraderError::Kind::EmptyResponse: return "EmptyResponse";
        case GraderError::Kind::BackendUnavailable: return "BackendUnavailable";
        case GraderError::Kind::Storage: return "StorageFailure";
        case GraderError::Kind::Internal: return "InternalError";
    }
    return "InternalError";
}

const std::regex kAttemptRoute(R"(^/api/sessions/([^/]+)/questions/([^/]+)/attempts/?$)");
const std::regex kProgressRoute(R"(^/api/sessions/([^/]+)/progress/?$)");

}  // namespace

json attempt_view(const GradeAttempt& a, int attempts_remaining, int attempt_cap) {
    json tests = json::array();
    for (std::size_t i = 0; i < a.per_test.size(); ++i) {
        const auto& t = a.per_test[i];
        tests.push_back({{"index", i},
                         {"expected", t.expected.to_literal()},
                         {"actual", t.actual.describe()},
                         {"passed", t.passed}});
    }
    json verdict = {{"kind", to_string(a.verdict.kind)}, {"detail", a.verdict.detail}};
    verdict["failed_vector_index"] =
        a.verdict.failed_vector_index ? json(*a.verdict.failed_vector_index) : json(nullptr);
    return {{"attempt_number", a.attempt_number},
            {"question_id", a.question_id},
            {"declared_language", a.declared_language ? json(*a.declared_language) : json(nullptr)},
            {"verdict", verdict},
            {"generated_code", a.extracted_code ? json(*a.extracted_code) : json(nullptr)},
            {"raw_completion", a.raw_completion},
            {"tests", tests},
            {"attempts_remaining", attempts_remaining},
            {"attempt_cap", attempt_cap},
            {"timestamp", format_timestamp(a.timestamp)}};
}

Service::Service(std::shared_ptr<Grader> grader, std::optional<std::filesystem::path> static_dir)
    : grader_(std::move(grader)), static_dir_(std::move(static_dir)) {}

Service::~Service() { stop(); }

ApiResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
    try {
        std::smatch m;
        if (path == "/api/questions" || path == "/api/questions/") {
            if (method != "GET") return error(405, "MethodNotAllowed", "use GET");
            return list_questions();
        }
        if (path == "/api/sessions" || path == "/api/sessions/") {
            if (method != "POST") return error(405, "MethodNotAllowed", "use POST");
            return create_session();
        }
        if (std::regex_match(path, m, kAttemptRoute)) {
            if (method != "POST") return error(405, "MethodNotAllowed", "use POST");
            return submit(m[1], m[2], body);
        }
        if (std::regex_match(path, m, kProgressRoute)) {
            if (method != "GET") return error(405, "MethodNotAllowed", "use GET");
            return progress(m[1]);
        }
        return error(404, "NotFound", "no route for " + method + " " + path);
    } catch (const GraderError& e) {
        return error(status_for(e.kind()), kind_name(e.kind()), e.what());
    } catch (const std::exception& e) {
        return error(500, "InternalError", e.what());
    }
}

ApiResponse Service::list_questions() const {
    json out = json::array();
    for (const auto& q : grader_->bank().questions()) {
        out.push_back({{"id", q.id},
                       {"title", q.title},
                       {"segment_language", to_string(q.segment_language)},
                       {"displayed_code", q.displayed_code},
                       {"instruction_language_mode", to_string(q.instruction_language_mode)}});
    }
    return reply(200, out);
}

ApiResponse Service::create_session() const {
    auto sid = grader_->create_session();
    auto policy = grader_->policy(sid);
    return reply(201, json{{"session_id", sid}, {"attempt_cap", policy.attempt_cap}});
}

ApiResponse Service::submit(const std::string& sid, const std::string& qid, const std::string& body) const {
    if (!grader_->has_session(sid)) return error(404, "UnknownSession", "unknown session " + sid);
    if (!grader_->bank().find(qid)) return error(404, "UnknownQuestion", "unknown question " + qid);

    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        return error(400, "BadRequest", std::string("body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) return error(400, "BadRequest", "body must be a JSON object");
    std::string text;
    if (auto it = j.find("response_text"); it != j.end() && it->is_string()) text = it->get<std::string>();
    else if (it != j.end() && !it->is_null()) return error(400, "BadRequest", "response_text must be a string");
    std::optional<std::string> language;
    if (auto it = j.find("declared_language"); it != j.end() && it->is_string() && !it->get<std::string>().empty())
        language = it->get<std::string>();

    GradeAttempt a = grader_->submit(sid, qid, text, language);
    const int remaining = grader_->attempts_remaining(sid, qid);
    const int cap = grader_->policy(sid).attempt_cap;
    json view = attempt_view(a, remaining, cap);
    if (a.verdict.kind == VerdictKind::AttemptsExhausted) {
        view["error"] = "AttemptsExhausted";
        return reply(409, view);
    }
    return reply(200, view);
}

ApiResponse Service::progress(const std::string& sid) const {
    if (!grader_->has_session(sid)) return error(404, "UnknownSession", "unknown session " + sid);
    const int cap = grader_->policy(sid).attempt_cap;
    json qs = json::array();
    for (const auto& p : grader_->progress(sid)) {
        qs.push_back({{"question_id", p.question_id},
                      {"attempts_used", p.attempts_used},
                      {"attempts_remaining", std::max(0, cap - p.attempts_used)},
                      {"best_verdict", p.best_verdict ? json(to_string(*p.best_verdict)) : json(nullptr)}});
    }
    return reply(200, json{{"session_id", sid}, {"attempt_cap", cap}, {"questions", qs}});
}

bool Service::serve(const std::string& host, int port, const std::function<void(int)>& on_ready) {
    server_ = std::make_unique<httplib::Server>();
    auto& srv = *server_;
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        auto r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    srv.Get(R"(/api/.*)", dispatch);
    srv.Post(R"(/api/.*)", dispatch);
    srv.Put(R"(/api/.*)", dispatch);
    srv.Delete(R"(/api/.*)", dispatch);
    if (static_dir_ && !srv.set_mount_point("/", static_dir_->string())) return false;

    const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound < 0) return false;
    if (on_ready) on_ready(bound);
    return srv.listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
}

}  // namespace eipl
