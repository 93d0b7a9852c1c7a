#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "eipl/grader.hpp"
#include "support.hpp"

using namespace eipl;
using eipl::testing::TempDir;
using nlohmann::json;

namespace {

std::shared_ptr<const Judge> shared_judge() {
    static auto j = std::make_shared<const Judge>(std::make_shared<const Sandbox>());
    return j;
}

std::shared_ptr<const QuestionBank> shared_bank() {
    static auto b = std::make_shared<const QuestionBank>(eipl::testing::repo_bank());
    return b;
}

const json& completions() {
    static const json j = eipl::testing::load_json(eipl::testing::fixture("completions.json"));
    return j;
}

std::string fenced(const std::string& code) { return "```python\n" + code + "\n```"; }
// Raw completions as a model would return them.
std::string correct(const std::string& id) { return completions()[id]["correct"].get<std::string>(); }
std::string wrong(const std::string& id) { return completions()[id]["wrong"].get<std::string>(); }

struct Rig {
    std::shared_ptr<ScriptedBackend> mock = std::make_shared<ScriptedBackend>();
    std::filesystem::path journal;
    std::unique_ptr<Grader> grader;

    Rig(const std::filesystem::path& journal_path, AttemptPolicy policy = {}) : journal(journal_path) {
        reopen(policy);
    }

    void reopen(AttemptPolicy policy = {}) {
        auto pipeline = std::make_shared<const GradingPipeline>(mock, shared_judge());
        grader = std::make_unique<Grader>(shared_bank(), pipeline, journal, policy);
    }
};

GraderError::Kind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const GraderError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no GraderError thrown";
    return GraderError::Kind::Internal;
}

const QuestionProgress& progress_of(const SessionProgress& p, const std::string& id) {
    for (const auto& q : p)
        if (q.question_id == id) return q;
    throw std::runtime_error("no progress for " + id);
}

}  // namespace

TEST(Pipeline, GradesCorrectAndIncorrect) {
    auto mock = std::make_shared<ScriptedBackend>(std::vector<std::string>{correct("c1_reverse_string"),
                                                                           wrong("c1_reverse_string")});
    GradingPipeline pipeline(mock, shared_judge());
    const auto& q = *shared_bank()->find("c1_reverse_string");
    auto a = pipeline.grade(q, "reverse the string", "English");
    EXPECT_TRUE(a.verdict.correct()) << a.verdict.detail;
    EXPECT_EQ(a.per_test.size(), q.test_vectors.size());
    EXPECT_TRUE(a.extracted_code.has_value());
    EXPECT_NE(a.assembled_prompt.find("written in English: reverse the string"), std::string::npos);

    auto b = pipeline.grade(q, "something else", "English");
    EXPECT_EQ(b.verdict.kind, VerdictKind::Incorrect);
    EXPECT_EQ(b.verdict.failed_vector_index, 1u);
}

TEST(Pipeline, FailureKinds) {
    auto mock = std::make_shared<ScriptedBackend>();
    GradingPipeline pipeline(mock, shared_judge());
    const auto& q = *shared_bank()->find("py6_substring_exists");

    mock->push("Sorry, I can only describe it.");
    EXPECT_EQ(pipeline.grade(q, "x", "English").verdict.kind, VerdictKind::ExtractionError);

    mock->push(fenced("def foo(s):\n    return True"));
    EXPECT_EQ(pipeline.grade(q, "x", "English").verdict.kind, VerdictKind::SignatureMismatch);

    mock->push(fenced("import numpy\ndef foo(a, b):\n    return True"));
    EXPECT_EQ(pipeline.grade(q, "x", "English").verdict.kind, VerdictKind::RuntimeError);

    mock->push(fenced("def foo(a, b):\n    return a.index(b) >= 0"));
    EXPECT_EQ(pipeline.grade(q, "x", "English").verdict.kind, VerdictKind::RuntimeError);

    // Queue empty: the mock is exhausted.
    auto a = pipeline.grade(q, "x", "English");
    EXPECT_EQ(a.verdict.kind, VerdictKind::GenerationError);

    mock->push_failure(GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(kind_of([&] { pipeline.grade(q, "x", "English"); }), GraderError::Kind::BackendUnavailable);
    EXPECT_EQ(kind_of([&] { pipeline.grade(q, "  ", "English"); }), GraderError::Kind::EmptyResponse);
}

TEST(Pipeline, HarnessFailureIsInternal) {
    auto broken = std::make_shared<const Judge>(std::make_shared<const Sandbox>(SandboxConfig{"/nonexistent/py"}));
    auto mock = std::make_shared<ScriptedBackend>(std::vector<std::string>{correct("c1_reverse_string")});
    GradingPipeline pipeline(mock, broken);
    EXPECT_EQ(kind_of([&] { pipeline.grade(*shared_bank()->find("c1_reverse_string"), "x", "English"); }),
              GraderError::Kind::Internal);
}

TEST(Grader, NumbersAttemptsAndTracksProgress) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    rig.mock->push(wrong("c1_reverse_string"));
    rig.mock->push(correct("c1_reverse_string"));
    rig.mock->push(wrong("c1_reverse_string"));

    EXPECT_EQ(rig.grader->submit(sid, "c1_reverse_string", "a").attempt_number, 1);
    EXPECT_EQ(rig.grader->submit(sid, "c1_reverse_string", "b").attempt_number, 2);
    auto third = rig.grader->submit(sid, "c1_reverse_string", "c");
    EXPECT_EQ(third.attempt_number, 3);
    EXPECT_EQ(third.verdict.kind, VerdictKind::Incorrect);

    auto p = rig.grader->progress(sid);
    EXPECT_EQ(p.size(), shared_bank()->size());
    EXPECT_EQ(progress_of(p, "c1_reverse_string").attempts_used, 3);
    EXPECT_EQ(progress_of(p, "c1_reverse_string").best_verdict, VerdictKind::Correct);
    EXPECT_EQ(progress_of(p, "c2_vowel_presence").attempts_used, 0);
    EXPECT_FALSE(progress_of(p, "c2_vowel_presence").best_verdict);
    EXPECT_EQ(rig.grader->attempts_remaining(sid, "c1_reverse_string"), 17);
}

TEST(Grader, BestVerdictIsLatestWithoutCorrect) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    rig.mock->push(wrong("py1_prime_check"));
    rig.mock->push("no code");
    rig.grader->submit(sid, "py1_prime_check", "a");
    rig.grader->submit(sid, "py1_prime_check", "b");
    EXPECT_EQ(progress_of(rig.grader->progress(sid), "py1_prime_check").best_verdict, VerdictKind::ExtractionError);
}

TEST(Grader, CapEnforcedAndDenialsNotJournaled) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session(AttemptPolicy{3, true});
    for (int i = 0; i < 3; ++i) rig.mock->push("no code");
    for (int i = 0; i < 3; ++i) rig.grader->submit(sid, "c2_vowel_presence", "x");
    const auto lines_before = read_lines(rig.journal).size();
    auto denied = rig.grader->submit(sid, "c2_vowel_presence", "x");
    EXPECT_EQ(denied.verdict.kind, VerdictKind::AttemptsExhausted);
    EXPECT_EQ(rig.mock->calls(), 3u);
    EXPECT_EQ(read_lines(rig.journal).size(), lines_before);
    EXPECT_EQ(rig.grader->attempts_remaining(sid, "c2_vowel_presence"), 0);
    // Other questions keep their own budget.
    rig.mock->push("no code");
    EXPECT_EQ(rig.grader->submit(sid, "c1_reverse_string", "x").attempt_number, 1);
}

TEST(Grader, NoAttemptsAfterCorrectWhenDisallowed) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session(AttemptPolicy{20, false});
    rig.mock->push(correct("py2_fibonacci_list"));
    EXPECT_TRUE(rig.grader->submit(sid, "py2_fibonacci_list", "x").verdict.correct());
    EXPECT_EQ(rig.grader->submit(sid, "py2_fibonacci_list", "x").verdict.kind, VerdictKind::AttemptsExhausted);
    EXPECT_EQ(rig.mock->calls(), 1u);
}

TEST(Grader, RejectionsConsumeNothing) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    rig.mock->push_failure(GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(kind_of([&] { rig.grader->submit(sid, "c1_reverse_string", "x"); }),
              GraderError::Kind::BackendUnavailable);
    EXPECT_EQ(kind_of([&] { rig.grader->submit(sid, "c1_reverse_string", ""); }), GraderError::Kind::EmptyResponse);
    EXPECT_EQ(kind_of([&] { rig.grader->submit(sid, "nope", "x"); }), GraderError::Kind::UnknownQuestion);
    EXPECT_EQ(kind_of([&] { rig.grader->submit("bogus", "c1_reverse_string", "x"); }),
              GraderError::Kind::UnknownSession);
    EXPECT_EQ(rig.grader->attempts_remaining(sid, "c1_reverse_string"), 20);
    rig.mock->push("no code");
    EXPECT_EQ(rig.grader->submit(sid, "c1_reverse_string", "x").attempt_number, 1);
}

TEST(Grader, DeclaredLanguageReachesPrompt) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    rig.mock->push("no code");
    rig.mock->push("no code");
    rig.grader->submit(sid, "c1_reverse_string", "ulta karo", std::string("Hindi"));
    rig.grader->submit(sid, "c1_reverse_string", "reverse it");
    auto prompts = rig.mock->prompts();
    EXPECT_NE(prompts[0].find("written in Hindi: ulta karo"), std::string::npos);
    EXPECT_NE(prompts[1].find("written in English: reverse it"), std::string::npos);
}

TEST(Grader, ReplayRestoresIdenticalState) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto s1 = rig.grader->create_session(AttemptPolicy{5, false});
    auto s2 = rig.grader->create_session();
    rig.mock->push(wrong("c3_count_even"));
    rig.mock->push(correct("c3_count_even"));
    rig.mock->push("no code");
    rig.grader->submit(s1, "c3_count_even", "a");
    rig.grader->submit(s1, "c3_count_even", "b");
    rig.grader->submit(s2, "py4_largest_positive", "c");
    auto p1 = rig.grader->progress(s1);
    auto p2 = rig.grader->progress(s2);

    rig.reopen();
    EXPECT_TRUE(rig.grader->has_session(s1));
    EXPECT_EQ(rig.grader->progress(s1), p1);
    EXPECT_EQ(rig.grader->progress(s2), p2);
    EXPECT_EQ(rig.grader->policy(s1).attempt_cap, 5);
    EXPECT_FALSE(rig.grader->policy(s1).allow_after_correct);
    EXPECT_EQ(rig.grader->attempts_remaining(s1, "c3_count_even"), 3);
}

TEST(Grader, TornTailIsDiscarded) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    rig.mock->push("no code");
    rig.grader->submit(sid, "c1_reverse_string", "a");
    auto before = rig.grader->progress(sid);
    {
        std::ofstream out(rig.journal, std::ios::app | std::ios::binary);
        out << R"({"type":"attempt","session_id":")" << sid << R"(","attempt":{"attempt_num)";
    }
    rig.reopen();
    EXPECT_EQ(rig.grader->progress(sid), before);
    rig.mock->push("no code");
    EXPECT_EQ(rig.grader->submit(sid, "c1_reverse_string", "b").attempt_number, 2);
    rig.reopen();
    EXPECT_EQ(progress_of(rig.grader->progress(sid), "c1_reverse_string").attempts_used, 2);
}

TEST(Grader, CorruptMiddleRecordFailsLoudly) {
    TempDir tmp;
    const auto path = tmp / "journal.jsonl";
    {
        Rig rig(path);
        rig.grader->create_session();
        rig.grader->create_session();
    }
    auto data = read_file(path);
    data[0] = '#';
    eipl::testing::write_text(path, data);
    EXPECT_THROW(Rig rig(path), StorageFailure);
}

TEST(Grader, StorageFailureSurfaces) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session();
    // Turning the journal into a directory makes every append fail.
    std::filesystem::remove(rig.journal);
    std::filesystem::create_directory(rig.journal);
    rig.mock->push("no code");
    EXPECT_EQ(kind_of([&] { rig.grader->submit(sid, "c1_reverse_string", "x"); }), GraderError::Kind::Storage);
    EXPECT_EQ(kind_of([&] { rig.grader->create_session(); }), GraderError::Kind::Storage);
    EXPECT_EQ(rig.grader->attempts_remaining(sid, "c1_reverse_string"), 20);
}

TEST(Grader, ConcurrentSubmissionsRespectCap) {
    TempDir tmp;
    Rig rig(tmp / "journal.jsonl");
    auto sid = rig.grader->create_session(AttemptPolicy{6, true});
    for (int i = 0; i < 12; ++i) rig.mock->push("no code");
    std::mutex mu;
    std::multiset<int> numbers;
    int exhausted = 0;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 3; ++i) {
                auto a = rig.grader->submit(sid, "c1_reverse_string", "x");
                std::lock_guard lock(mu);
                if (a.verdict.kind == VerdictKind::AttemptsExhausted)
                    ++exhausted;
                else
                    numbers.insert(a.attempt_number);
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(numbers, (std::multiset<int>{1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(exhausted, 6);
}

TEST(RandomToken, HexAndUnique) {
    auto a = random_token(), b = random_token();
    EXPECT_EQ(a.size(), 32u);
    EXPECT_NE(a, b);
}
