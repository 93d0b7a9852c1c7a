#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "eipl/value.hpp"

namespace eipl {

enum class SegmentLanguage { C, Python };
enum class InstructionMode { English, MotherTongue, Free };

std::string_view to_string(SegmentLanguage l);
std::string_view to_string(InstructionMode m);
SegmentLanguage segment_language_from(std::string_view s);
InstructionMode instruction_mode_from(std::string_view s);

/// A code-comprehension question: what the student sees plus the hidden
/// reference implementation and its test vectors.
struct Question {
    std::string id;
    std::string title;
    SegmentLanguage segment_language = SegmentLanguage::Python;
    std::string displayed_code;
    std::string reference_source;
    std::vector<ArgumentTuple> test_vectors;
    InstructionMode instruction_language_mode = InstructionMode::Free;

    bool operator==(const Question&) const = default;
};

/// Static invariant checks; an empty result means the question is well formed.
/// Does not execute any code.
std::vector<std::string> validate_question(const Question& q);

/// Same checks plus id uniqueness across a bank.
std::vector<std::string> validate_bank(const std::vector<Question>& bank);

enum class VerdictKind {
    Correct,
    Incorrect,
    GenerationError,
    ExtractionError,
    RuntimeError,
    Timeout,
    SignatureMismatch,
    AttemptsExhausted,
};

std::string_view to_string(VerdictKind k);
VerdictKind verdict_kind_from(std::string_view s);

struct Verdict {
    VerdictKind kind = VerdictKind::Incorrect;
    /// Set only for Incorrect: index of the first failing vector.
    std::optional<std::size_t> failed_vector_index;
    std::string detail;

    bool correct() const { return kind == VerdictKind::Correct; }
    bool operator==(const Verdict&) const = default;

    static Verdict make_correct() { return {VerdictKind::Correct, std::nullopt, {}}; }
    static Verdict make_incorrect(std::size_t index, std::string detail) {
        return {VerdictKind::Incorrect, index, std::move(detail)};
    }
    static Verdict make(VerdictKind kind, std::string detail) {
        return {kind, std::nullopt, std::move(detail)};
    }
};

/// Result of one sandboxed call of the candidate.
struct Outcome {
    struct Returned {
        Value value;
        bool operator==(const Returned&) const = default;
    };
    struct Raised {
        std::string error;
        bool operator==(const Raised&) const = default;
    };
    struct TimedOut {
        bool operator==(const TimedOut&) const = default;
    };
    struct MemoryExceeded {
        bool operator==(const MemoryExceeded&) const = default;
    };
    struct HarnessFailure {
        std::string reason;
        bool operator==(const HarnessFailure&) const = default;
    };
    using Variant = std::variant<Returned, Raised, TimedOut, MemoryExceeded, HarnessFailure>;

    Variant result;
    /// Printed output; captured for transcripts, ignored for grading.
    std::string stdout_text;

    bool returned() const { return std::holds_alternative<Returned>(result); }
    const Value& value() const { return std::get<Returned>(result).value; }
    std::string describe() const;

    bool operator==(const Outcome& o) const { return result == o.result; }
};

struct TestResult {
    ArgumentTuple arguments;
    Value expected;
    Outcome actual;
    bool passed = false;
};

struct AttemptPolicy {
    int attempt_cap = 20;
    bool allow_after_correct = true;
};

using Timestamp = std::chrono::system_clock::time_point;

/// One graded submission with its full transcript.
struct GradeAttempt {
    int attempt_number = 0;
    std::string question_id;
    std::string response_text;
    std::optional<std::string> declared_language;
    std::string assembled_prompt;
    std::string raw_completion;
    std::optional<std::string> extracted_code;
    std::vector<TestResult> per_test;
    Verdict verdict;
    Timestamp timestamp{};
};

// Structured-text (JSON) encodings. Parsers throw std::invalid_argument or
// nlohmann::json::exception on malformed input.
nlohmann::json to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Outcome& o);
Outcome outcome_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttemptPolicy& p);
AttemptPolicy policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GradeAttempt& a);
GradeAttempt attempt_from_json(const nlohmann::json& j);

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view s);

}  // namespace eipl
