#include "eipl/grader.hpp"

#include <openssl/rand.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "eipl/io.hpp"

namespace eipl {

using nlohmann::json;

std::string random_token() {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof(bytes)) != 1) throw std::runtime_error("RAND_bytes failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (unsigned char b : bytes) {
        s += kHex[b >> 4];
        s += kHex[b & 0xf];
    }
    return s;
}

namespace {

Timestamp now_ms() {
    auto now = std::chrono::system_clock::now();
    return std::chrono::time_point_cast<std::chrono::milliseconds>(now);
}

}  // namespace

GradingPipeline::GradingPipeline(std::shared_ptr<CompletionBackend> backend,
                                 std::shared_ptr<const Judge> judge, PipelineConfig config)
    : backend_(std::move(backend)), judge_(std::move(judge)), config_(std::move(config)) {}

const PromptTemplate& GradingPipeline::prompt_template() const {
    return config_.prompt_template ? *config_.prompt_template : PromptTemplate::standard();
}

GradeAttempt GradingPipeline::grade(const Question& q, const std::string& response_text,
                                    const std::string& language_name) const {
    GradeAttempt a;
    a.question_id = q.id;
    a.response_text = response_text;
    a.timestamp = now_ms();
    try {
        a.assembled_prompt = prompt_template().build(language_name, response_text);
    } catch (const PromptError& e) {
        throw GraderError(GraderError::Kind::EmptyResponse, e.what());
    }

    CompletionRequest req;
    req.prompt = a.assembled_prompt;
    req.model_name = config_.model_name;
    req.temperature = config_.temperature;
    req.max_output_tokens = config_.max_output_tokens;
    req.timeout = config_.request_timeout;
    try {
        a.raw_completion = backend_->complete(req).text;
    } catch (const GatewayError& e) {
        switch (e.kind()) {
            case GatewayError::Kind::BackendUnavailable:
                throw GraderError(GraderError::Kind::BackendUnavailable, e.what());
            case GatewayError::Kind::StorageFailure:
                throw GraderError(GraderError::Kind::Storage, e.what());
            default:
                a.verdict = Verdict::make(VerdictKind::GenerationError, e.what());
                return a;
        }
    }

    try {
        a.extracted_code = extract_code(a.raw_completion);
    } catch (const ExtractionError& e) {
        a.verdict = Verdict::make(VerdictKind::ExtractionError, e.what());
        return a;
    }

    try {
        const auto arity = q.test_vectors.front().arity();
        auto probe = judge_->sandbox().probe_signature(*a.extracted_code, "foo", arity, judge_->limits());
        if (probe.status == SignatureStatus::Mismatch) {
            a.verdict = Verdict::make(VerdictKind::SignatureMismatch,
                                      "foo does not accept " + std::to_string(arity) +
                                          " positional argument(s): " + probe.detail);
            return a;
        }
        if (probe.status == SignatureStatus::LoadFailed) {
            a.verdict = Verdict::make(VerdictKind::RuntimeError, "generated code failed to load: " + probe.detail);
            return a;
        }
        auto judgement = judge_->judge(*a.extracted_code, q);
        a.verdict = std::move(judgement.verdict);
        a.per_test = std::move(judgement.per_test);
    } catch (const HarnessError& e) {
        throw GraderError(GraderError::Kind::Internal, e.what());
    }
    return a;
}

AttemptJournal::AttemptJournal(std::filesystem::path path) : path_(std::move(path)) {
    // A crash mid-append leaves an unterminated record; drop it.
    truncate_torn_tail(path_);
}

void AttemptJournal::append_session(const std::string& session_id, const AttemptPolicy& policy) {
    json j = {{"type", "session"},
              {"session_id", session_id},
              {"policy", to_json(policy)},
              {"timestamp", format_timestamp(std::chrono::system_clock::now())}};
    std::lock_guard lock(mu_);
    append_line_durable(path_, j.dump());
}

void AttemptJournal::append_attempt(const std::string& session_id, const GradeAttempt& attempt) {
    json j = {{"type", "attempt"}, {"session_id", session_id}, {"attempt", to_json(attempt)}};
    std::lock_guard lock(mu_);
    append_line_durable(path_, j.dump());
}

std::vector<std::pair<std::string, AttemptJournal::SessionRecord>> AttemptJournal::replay() const {
    std::vector<std::pair<std::string, SessionRecord>> sessions;
    std::map<std::string, std::size_t> index;
    const auto lines = read_lines(path_);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        json j;
        try {
            j = json::parse(line.text);
        } catch (const json::exception& e) {
            if (i + 1 == lines.size() && !line.terminated) break;
            throw StorageFailure("journal line " + std::to_string(line.number) + " is corrupt: " + e.what());
        }
        try {
            const auto type = j.at("type").get<std::string>();
            const auto sid = j.at("session_id").get<std::string>();
            if (type == "session") {
                if (index.count(sid)) continue;
                index[sid] = sessions.size();
                sessions.push_back({sid, SessionRecord{policy_from_json(j.at("policy")), {}}});
            } else if (type == "attempt") {
                auto it = index.find(sid);
                if (it == index.end()) throw std::invalid_argument("attempt for unknown session " + sid);
                sessions[it->second].second.attempts.push_back(attempt_from_json(j.at("attempt")));
            }
        } catch (const std::exception& e) {
            throw StorageFailure("journal line " + std::to_string(line.number) + ": " + e.what());
        }
    }
    return sessions;
}

Grader::Grader(std::shared_ptr<const QuestionBank> bank, std::shared_ptr<const GradingPipeline> pipeline,
               std::filesystem::path journal_path, AttemptPolicy default_policy)
    : bank_(std::move(bank)),
      pipeline_(std::move(pipeline)),
      default_policy_(default_policy),
      journal_(std::move(journal_path)) {
    for (auto& [sid, record] : journal_.replay()) {
        auto s = std::make_unique<SessionState>();
        s->policy = record.policy;
        for (const auto& a : record.attempts) apply(*s, a);
        sessions_.emplace(sid, std::move(s));
    }
}

void Grader::apply(SessionState& s, const GradeAttempt& a) {
    s.used[a.question_id] = std::max(s.used[a.question_id], a.attempt_number);
    s.verdicts[a.question_id].push_back(a.verdict.kind);
}

std::string Grader::create_session() { return create_session(default_policy_); }

std::string Grader::create_session(const AttemptPolicy& policy) {
    auto sid = random_token();
    try {
        journal_.append_session(sid, policy);
    } catch (const StorageFailure& e) {
        throw GraderError(GraderError::Kind::Storage, e.what());
    }
    auto s = std::make_unique<SessionState>();
    s->policy = policy;
    std::unique_lock lock(sessions_mu_);
    sessions_.emplace(sid, std::move(s));
    return sid;
}

bool Grader::has_session(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.count(session_id) != 0;
}

Grader::SessionState& Grader::state(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end())
        throw GraderError(GraderError::Kind::UnknownSession, "unknown session " + session_id);
    return *it->second;
}

GradeAttempt Grader::submit(const std::string& session_id, const std::string& question_id,
                            const std::string& response_text,
                            const std::optional<std::string>& declared_language) {
    SessionState& s = state(session_id);
    const Question* q = bank_->find(question_id);
    if (!q) throw GraderError(GraderError::Kind::UnknownQuestion, "unknown question " + question_id);

    std::lock_guard lock(s.mu);
    const int used = s.used[question_id];
    const auto& history = s.verdicts[question_id];
    const bool solved = std::find(history.begin(), history.end(), VerdictKind::Correct) != history.end();
    if (used >= s.policy.attempt_cap || (solved && !s.policy.allow_after_correct)) {
        GradeAttempt denied;
        denied.attempt_number = used;
        denied.question_id = question_id;
        denied.response_text = response_text;
        denied.declared_language = declared_language;
        denied.timestamp = now_ms();
        denied.verdict = Verdict::make(
            VerdictKind::AttemptsExhausted,
            used >= s.policy.attempt_cap
                ? "all " + std::to_string(s.policy.attempt_cap) + " attempts used"
                : "question already answered correctly");
        return denied;
    }

    const auto language = declared_language.value_or("English");
    GradeAttempt a = pipeline_->grade(*q, response_text, language);
    a.attempt_number = used + 1;
    a.declared_language = declared_language;
    try {
        journal_.append_attempt(session_id, a);
    } catch (const StorageFailure& e) {
        throw GraderError(GraderError::Kind::Storage, e.what());
    }
    apply(s, a);
    return a;
}

SessionProgress Grader::progress(const std::string& session_id) const {
    SessionState& s = state(session_id);
    std::lock_guard lock(s.mu);
    SessionProgress out;
    for (const auto& q : bank_->questions()) {
        QuestionProgress p;
        p.question_id = q.id;
        if (auto it = s.used.find(q.id); it != s.used.end()) p.attempts_used = it->second;
        if (auto it = s.verdicts.find(q.id); it != s.verdicts.end() && !it->second.empty()) {
            const auto& v = it->second;
            // Best is Correct if ever achieved, otherwise the latest verdict.
            p.best_verdict = std::find(v.begin(), v.end(), VerdictKind::Correct) != v.end()
                                 ? VerdictKind::Correct
                                 : v.back();
        }
        out.push_back(std::move(p));
    }
    return out;
}

int Grader::attempts_remaining(const std::string& session_id, const std::string& question_id) const {
    SessionState& s = state(session_id);
    std::lock_guard lock(s.mu);
    auto it = s.used.find(question_id);
    const int used = it == s.used.end() ? 0 : it->second;
    return std::max(0, s.policy.attempt_cap - used);
}

AttemptPolicy Grader::policy(const std::string& session_id) const {
    SessionState& s = state(session_id);
    std::lock_guard lock(s.mu);
    return s.policy;
}

}  // namespace eipl
