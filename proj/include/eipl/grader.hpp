#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "eipl/bank.hpp"
#include "eipl/equivalence.hpp"
#include "eipl/gateway.hpp"
#include "eipl/model.hpp"
#include "eipl/prompt.hpp"

namespace eipl {

class GraderError : public std::runtime_error {
public:
    enum class Kind { UnknownQuestion, UnknownSession, EmptyResponse, BackendUnavailable, Internal, Storage };
    GraderError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct PipelineConfig {
    std::shared_ptr<const PromptTemplate> prompt_template;  // null: the standard template
    std::string model_name = "gpt-4o";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    Millis request_timeout{60'000};
};

/// prompt -> completion -> extraction -> signature probe -> judge.
class GradingPipeline {
public:
    GradingPipeline(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<const Judge> judge,
                    PipelineConfig config = {});

    /// Grades one response. attempt_number is left at 0 for the caller.
    /// Throws GraderError(EmptyResponse), GraderError(BackendUnavailable) and
    /// GraderError(Internal) for harness failures; every other failure is a
    /// verdict.
    GradeAttempt grade(const Question& q, const std::string& response_text,
                       const std::string& language_name) const;

    const PromptTemplate& prompt_template() const;
    const PipelineConfig& config() const { return config_; }

private:
    std::shared_ptr<CompletionBackend> backend_;
    std::shared_ptr<const Judge> judge_;
    PipelineConfig config_;
};

struct QuestionProgress {
    std::string question_id;
    int attempts_used = 0;
    std::optional<VerdictKind> best_verdict;

    bool operator==(const QuestionProgress&) const = default;
};

using SessionProgress = std::vector<QuestionProgress>;

/// Append-only line-delimited journal of sessions and graded attempts.
class AttemptJournal {
public:
    struct SessionRecord {
        AttemptPolicy policy;
        std::vector<GradeAttempt> attempts;
    };

    /// Truncates a torn trailing record left by a crash.
    explicit AttemptJournal(std::filesystem::path path);

    void append_session(const std::string& session_id, const AttemptPolicy& policy);
    void append_attempt(const std::string& session_id, const GradeAttempt& attempt);

    /// Sessions in creation order. Throws StorageFailure on a corrupt record
    /// anywhere but the final line.
    std::vector<std::pair<std::string, SessionRecord>> replay() const;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mu_;
};

/// Enforces the attempt policy per (session, question) and persists every
/// consumed attempt before returning it.
class Grader {
public:
    Grader(std::shared_ptr<const QuestionBank> bank, std::shared_ptr<const GradingPipeline> pipeline,
           std::filesystem::path journal_path, AttemptPolicy default_policy = {});

    std::string create_session();
    std::string create_session(const AttemptPolicy& policy);
    bool has_session(const std::string& session_id) const;

    GradeAttempt submit(const std::string& session_id, const std::string& question_id,
                        const std::string& response_text,
                        const std::optional<std::string>& declared_language = std::nullopt);

    SessionProgress progress(const std::string& session_id) const;
    int attempts_remaining(const std::string& session_id, const std::string& question_id) const;
    AttemptPolicy policy(const std::string& session_id) const;

    const QuestionBank& bank() const { return *bank_; }

private:
    struct SessionState {
        AttemptPolicy policy;
        std::mutex mu;  // serializes submissions within the session
        std::map<std::string, int> used;
        std::map<std::string, std::vector<VerdictKind>> verdicts;
    };

    SessionState& state(const std::string& session_id) const;
    static void apply(SessionState& s, const GradeAttempt& a);

    std::shared_ptr<const QuestionBank> bank_;
    std::shared_ptr<const GradingPipeline> pipeline_;
    AttemptPolicy default_policy_;
    mutable AttemptJournal journal_;
    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

std::string random_token();

}  // namespace eipl
