#include <gtest/gtest.h>

#include "eipl/bank.hpp"
#include "eipl/model.hpp"
#include "support.hpp"

using namespace eipl;
using eipl::testing::TempDir;
using nlohmann::json;

namespace {

Question reverse_question() {
    Question q;
    q.id = "rev";
    q.title = "Reverse a String";
    q.segment_language = SegmentLanguage::C;
    q.displayed_code = "void foo(char *s);";
    q.reference_source = "def foo(s):\n    return s[::-1]\n";
    q.test_vectors = {ArgumentTuple{{Value("")}}, ArgumentTuple{{Value("ab")}}};
    return q;
}

}  // namespace

TEST(ValidateQuestion, WellFormedHasNoViolations) { EXPECT_TRUE(validate_question(reverse_question()).empty()); }

TEST(ValidateQuestion, EmptyVectors) {
    auto q = reverse_question();
    q.test_vectors.clear();
    EXPECT_EQ(validate_question(q), std::vector<std::string>{"test_vectors empty"});
}

TEST(ValidateQuestion, InconsistentArity) {
    auto q = reverse_question();
    q.test_vectors.push_back(ArgumentTuple{{Value("a"), Value("b")}});
    EXPECT_EQ(validate_question(q), std::vector<std::string>{"inconsistent arity"});
}

TEST(ValidateQuestion, MissingEdgeCase) {
    auto q = reverse_question();
    q.test_vectors = {ArgumentTuple{{Value("ab")}}};
    EXPECT_EQ(validate_question(q), std::vector<std::string>{"no edge-case vector"});
}

TEST(ValidateBank, DuplicateIds) {
    auto q = reverse_question();
    auto violations = validate_bank({q, q});
    ASSERT_EQ(violations.size(), 1u);
    EXPECT_NE(violations[0].find("duplicate"), std::string::npos);
}

TEST(Model, QuestionJsonRoundTrip) {
    auto q = reverse_question();
    q.instruction_language_mode = InstructionMode::MotherTongue;
    EXPECT_EQ(question_from_json(json::parse(to_json(q).dump())), q);
}

TEST(Model, VerdictJsonRoundTripAndInvariant) {
    for (const auto& v : {Verdict::make_correct(), Verdict::make_incorrect(3, "vector 3"),
                          Verdict::make(VerdictKind::Timeout, "t"), Verdict::make(VerdictKind::AttemptsExhausted, "")}) {
        EXPECT_EQ(verdict_from_json(to_json(v)), v);
    }
    EXPECT_THROW(verdict_from_json(json{{"kind", "Incorrect"}, {"failed_vector_index", nullptr}}),
                 std::invalid_argument);
    EXPECT_THROW(verdict_from_json(json{{"kind", "Correct"}, {"failed_vector_index", 0}}), std::invalid_argument);
    EXPECT_THROW(verdict_from_json(json{{"kind", "Bogus"}}), std::invalid_argument);
}

TEST(Model, OutcomeJsonRoundTrip) {
    std::vector<Outcome> outcomes{
        {Outcome::Returned{Value(Value::List{1, 2.5, "x"})}, "printed"},
        {Outcome::Raised{"ZeroDivisionError: division by zero"}, ""},
        {Outcome::TimedOut{}, ""},
        {Outcome::MemoryExceeded{}, ""},
        {Outcome::HarnessFailure{"runtime missing"}, ""},
    };
    for (const auto& o : outcomes) {
        auto back = outcome_from_json(json::parse(to_json(o).dump()));
        EXPECT_EQ(back, o);
        EXPECT_EQ(back.stdout_text, o.stdout_text);
    }
}

TEST(Model, AttemptJsonRoundTrip) {
    GradeAttempt a;
    a.attempt_number = 2;
    a.question_id = "rev";
    a.response_text = "उल्टा करो";
    a.declared_language = "Hindi";
    a.assembled_prompt = "prompt";
    a.raw_completion = "```\ndef foo(s): return s\n```";
    a.extracted_code = "def foo(s): return s";
    a.per_test.push_back({ArgumentTuple{{Value("ab")}}, Value("ba"), {Outcome::Returned{Value("ab")}, ""}, false});
    a.verdict = Verdict::make_incorrect(0, "vector 0");
    a.timestamp = parse_timestamp("2024-05-01T10:20:30.456Z");

    auto b = attempt_from_json(json::parse(to_json(a).dump()));
    EXPECT_EQ(b.attempt_number, a.attempt_number);
    EXPECT_EQ(b.response_text, a.response_text);
    EXPECT_EQ(b.declared_language, a.declared_language);
    EXPECT_EQ(b.extracted_code, a.extracted_code);
    EXPECT_EQ(b.verdict, a.verdict);
    EXPECT_EQ(b.timestamp, a.timestamp);
    ASSERT_EQ(b.per_test.size(), 1u);
    EXPECT_EQ(b.per_test[0].arguments, a.per_test[0].arguments);
    EXPECT_EQ(b.per_test[0].actual, a.per_test[0].actual);
    EXPECT_FALSE(b.per_test[0].passed);
}

TEST(Model, PolicyRoundTripAndValidation) {
    AttemptPolicy p{5, false};
    auto back = policy_from_json(to_json(p));
    EXPECT_EQ(back.attempt_cap, 5);
    EXPECT_FALSE(back.allow_after_correct);
    EXPECT_THROW(policy_from_json(json{{"attempt_cap", 0}}), std::invalid_argument);
}

TEST(Model, TimestampFormat) {
    auto t = parse_timestamp("1999-12-31T23:59:59.001Z");
    EXPECT_EQ(format_timestamp(t), "1999-12-31T23:59:59.001Z");
}

TEST(Bank, RepoBankHasElevenValidQuestions) {
    const auto& bank = eipl::testing::repo_bank();
    ASSERT_EQ(bank.size(), 11u);
    int c = 0, py = 0;
    for (const auto& q : bank.questions()) {
        EXPECT_TRUE(validate_question(q).empty()) << q.id;
        (q.segment_language == SegmentLanguage::C ? c : py)++;
    }
    EXPECT_EQ(c, 5);
    EXPECT_EQ(py, 6);
}

TEST(Bank, MissingDirectoryIsEmpty) {
    TempDir tmp;
    EXPECT_TRUE(QuestionBank::load_dir(tmp / "nope").empty());
    EXPECT_TRUE(QuestionBank::load_dir(tmp.path()).empty());
}

TEST(Bank, SaveLoadRoundTrip) {
    TempDir tmp;
    auto q = reverse_question();
    save_question_file(q, tmp / "rev.json");
    EXPECT_EQ(load_question_file(tmp / "rev.json"), q);
    auto bank = QuestionBank::load_dir(tmp.path());
    ASSERT_NE(bank.find("rev"), nullptr);
}

TEST(Bank, InvalidQuestionRejected) {
    TempDir tmp;
    auto q = reverse_question();
    q.test_vectors.clear();
    save_question_file(q, tmp / "bad.json");
    EXPECT_THROW(QuestionBank::load_dir(tmp.path()), BankError);
    eipl::testing::write_text(tmp / "bad.json", "{not json");
    EXPECT_THROW(QuestionBank::load_dir(tmp.path()), BankError);
}

TEST(Bank, CourseProfileSelectsEightAlternating) {
    auto profile = CourseProfile::load(eipl::testing::repo_data() / "profiles" / "course.json");
    auto deployed = apply_profile(eipl::testing::repo_bank(), profile);
    ASSERT_EQ(deployed.size(), 8u);
    for (std::size_t i = 0; i < deployed.size(); ++i) {
        EXPECT_EQ(deployed.questions()[i].instruction_language_mode,
                  i % 2 == 0 ? InstructionMode::English : InstructionMode::MotherTongue);
    }
}

TEST(Bank, ProfileWithUnknownQuestionFails) {
    CourseProfile p{"x", {{"missing", InstructionMode::English}}};
    EXPECT_THROW(apply_profile(eipl::testing::repo_bank(), p), BankError);
}
