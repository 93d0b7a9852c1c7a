#include "eipl/model.hpp"

#include <algorithm>
#include <ctime>
#include <set>
#include <stdexcept>

namespace eipl {

using nlohmann::json;

std::string_view to_string(SegmentLanguage l) {
    return l == SegmentLanguage::C ? "C" : "Python";
}

std::string_view to_string(InstructionMode m) {
    switch (m) {
        case InstructionMode::English: return "English";
        case InstructionMode::MotherTongue: return "MotherTongue";
        case InstructionMode::Free: return "Free";
    }
    return "Free";
}

SegmentLanguage segment_language_from(std::string_view s) {
    if (s == "C") return SegmentLanguage::C;
    if (s == "Python") return SegmentLanguage::Python;
    throw std::invalid_argument("unknown segment_language: " + std::string(s));
}

InstructionMode instruction_mode_from(std::string_view s) {
    if (s == "English") return InstructionMode::English;
    if (s == "MotherTongue") return InstructionMode::MotherTongue;
    if (s == "Free") return InstructionMode::Free;
    throw std::invalid_argument("unknown instruction_language_mode: " + std::string(s));
}

namespace {

constexpr std::pair<VerdictKind, std::string_view> kVerdictNames[] = {
    {VerdictKind::Correct, "Correct"},
    {VerdictKind::Incorrect, "Incorrect"},
    {VerdictKind::GenerationError, "GenerationError"},
    {VerdictKind::ExtractionError, "ExtractionError"},
    {VerdictKind::RuntimeError, "RuntimeError"},
    {VerdictKind::Timeout, "Timeout"},
    {VerdictKind::SignatureMismatch, "SignatureMismatch"},
    {VerdictKind::AttemptsExhausted, "AttemptsExhausted"},
};

// An edge case is an empty/zero-like argument: "", [], 0, 0.0, False or None.
bool is_edge_value(const Value& v) {
    if (v.is_none()) return true;
    if (v.is_bool()) return !v.as_bool();
    if (v.is_int()) return v.as_int() == 0;
    if (v.is_float()) return v.as_float() == 0.0;
    if (v.is_text()) return v.as_text().empty();
    const auto& l = v.as_list();
    return l.empty() || std::all_of(l.begin(), l.end(), [](const Value& e) {
               return e.is_list() && e.as_list().empty();
           });
}

}  // namespace

std::string_view to_string(VerdictKind k) {
    for (const auto& [kind, name] : kVerdictNames)
        if (kind == k) return name;
    return "Incorrect";
}

VerdictKind verdict_kind_from(std::string_view s) {
    for (const auto& [kind, name] : kVerdictNames)
        if (name == s) return kind;
    throw std::invalid_argument("unknown verdict kind: " + std::string(s));
}

std::vector<std::string> validate_question(const Question& q) {
    std::vector<std::string> violations;
    if (q.id.empty()) violations.emplace_back("id empty");
    if (q.reference_source.empty()) violations.emplace_back("reference_source empty");
    if (q.test_vectors.empty()) {
        violations.emplace_back("test_vectors empty");
        return violations;
    }
    const auto arity = q.test_vectors.front().arity();
    bool consistent = std::all_of(q.test_vectors.begin(), q.test_vectors.end(),
                                  [&](const ArgumentTuple& t) { return t.arity() == arity; });
    if (!consistent) violations.emplace_back("inconsistent arity");

    bool has_edge = std::any_of(q.test_vectors.begin(), q.test_vectors.end(), [](const auto& t) {
        return std::any_of(t.values.begin(), t.values.end(), is_edge_value);
    });
    if (!has_edge) violations.emplace_back("no edge-case vector");

    for (std::size_t i = 0; i < q.test_vectors.size(); ++i) {
        for (const auto& v : q.test_vectors[i].values) {
            if (v.depth() > Value::kMaxDepth) {
                violations.push_back("vector " + std::to_string(i) + " nests too deeply");
                break;
            }
        }
    }
    return violations;
}

std::vector<std::string> validate_bank(const std::vector<Question>& bank) {
    std::vector<std::string> violations;
    std::set<std::string> seen;
    for (const auto& q : bank) {
        for (auto& v : validate_question(q)) violations.push_back(q.id + ": " + v);
        if (!seen.insert(q.id).second) violations.push_back(q.id + ": duplicate id");
    }
    return violations;
}

std::string Outcome::describe() const {
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Returned>) return r.value.to_literal();
            else if constexpr (std::is_same_v<T, Raised>) return "raised " + r.error;
            else if constexpr (std::is_same_v<T, TimedOut>) return "timed out";
            else if constexpr (std::is_same_v<T, MemoryExceeded>) return "memory limit exceeded";
            else return "harness failure: " + r.reason;
        },
        result);
}

json to_json(const Question& q) {
    json vectors = json::array();
    for (const auto& t : q.test_vectors) vectors.push_back(t.to_json());
    return {
        {"id", q.id},
        {"title", q.title},
        {"segment_language", to_string(q.segment_language)},
        {"displayed_code", q.displayed_code},
        {"reference_source", q.reference_source},
        {"test_vectors", vectors},
        {"instruction_language_mode", to_string(q.instruction_language_mode)},
    };
}

Question question_from_json(const json& j) {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.title = j.at("title").get<std::string>();
    q.segment_language = segment_language_from(j.at("segment_language").get<std::string>());
    q.displayed_code = j.at("displayed_code").get<std::string>();
    q.reference_source = j.at("reference_source").get<std::string>();
    for (const auto& t : j.at("test_vectors")) q.test_vectors.push_back(ArgumentTuple::from_json(t));
    q.instruction_language_mode =
        instruction_mode_from(j.value("instruction_language_mode", std::string("Free")));
    return q;
}

json to_json(const Verdict& v) {
    json j = {{"kind", to_string(v.kind)}, {"detail", v.detail}};
    j["failed_vector_index"] = v.failed_vector_index ? json(*v.failed_vector_index) : json(nullptr);
    return j;
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.kind = verdict_kind_from(j.at("kind").get<std::string>());
    v.detail = j.value("detail", std::string());
    if (j.contains("failed_vector_index") && !j["failed_vector_index"].is_null())
        v.failed_vector_index = j["failed_vector_index"].get<std::size_t>();
    if (v.failed_vector_index.has_value() != (v.kind == VerdictKind::Incorrect))
        throw std::invalid_argument("failed_vector_index must be present iff kind is Incorrect");
    return v;
}

json to_json(const Outcome& o) {
    json j = std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Outcome::Returned>)
                return {{"status", "returned"}, {"value", r.value.to_json()}};
            else if constexpr (std::is_same_v<T, Outcome::Raised>)
                return {{"status", "raised"}, {"error", r.error}};
            else if constexpr (std::is_same_v<T, Outcome::TimedOut>)
                return {{"status", "timeout"}};
            else if constexpr (std::is_same_v<T, Outcome::MemoryExceeded>)
                return {{"status", "memory"}};
            else
                return {{"status", "harness_failure"}, {"error", r.reason}};
        },
        o.result);
    if (!o.stdout_text.empty()) j["stdout"] = o.stdout_text;
    return j;
}

Outcome outcome_from_json(const json& j) {
    Outcome o;
    const auto status = j.at("status").get<std::string>();
    if (status == "returned") o.result = Outcome::Returned{Value::from_json(j.at("value"))};
    else if (status == "raised") o.result = Outcome::Raised{j.at("error").get<std::string>()};
    else if (status == "timeout") o.result = Outcome::TimedOut{};
    else if (status == "memory") o.result = Outcome::MemoryExceeded{};
    else if (status == "harness_failure")
        o.result = Outcome::HarnessFailure{j.value("error", std::string())};
    else throw std::invalid_argument("unknown outcome status: " + status);
    o.stdout_text = j.value("stdout", std::string());
    return o;
}

json to_json(const AttemptPolicy& p) {
    return {{"attempt_cap", p.attempt_cap}, {"allow_after_correct", p.allow_after_correct}};
}

AttemptPolicy policy_from_json(const json& j) {
    AttemptPolicy p;
    p.attempt_cap = j.value("attempt_cap", 20);
    p.allow_after_correct = j.value("allow_after_correct", true);
    if (p.attempt_cap < 1) throw std::invalid_argument("attempt_cap must be >= 1");
    return p;
}

json to_json(const GradeAttempt& a) {
    json tests = json::array();
    for (const auto& t : a.per_test) {
        tests.push_back({{"arguments", t.arguments.to_json()},
                         {"expected", t.expected.to_json()},
                         {"actual", to_json(t.actual)},
                         {"passed", t.passed}});
    }
    return {
        {"attempt_number", a.attempt_number},
        {"question_id", a.question_id},
        {"response_text", a.response_text},
        {"declared_language", a.declared_language ? json(*a.declared_language) : json(nullptr)},
        {"assembled_prompt", a.assembled_prompt},
        {"raw_completion", a.raw_completion},
        {"extracted_code", a.extracted_code ? json(*a.extracted_code) : json(nullptr)},
        {"per_test", tests},
        {"verdict", to_json(a.verdict)},
        {"timestamp", format_timestamp(a.timestamp)},
    };
}

GradeAttempt attempt_from_json(const json& j) {
    GradeAttempt a;
    a.attempt_number = j.at("attempt_number").get<int>();
    a.question_id = j.at("question_id").get<std::string>();
    a.response_text = j.at("response_text").get<std::string>();
    if (!j.at("declared_language").is_null())
        a.declared_language = j["declared_language"].get<std::string>();
    a.assembled_prompt = j.at("assembled_prompt").get<std::string>();
    a.raw_completion = j.at("raw_completion").get<std::string>();
    if (!j.at("extracted_code").is_null()) a.extracted_code = j["extracted_code"].get<std::string>();
    for (const auto& t : j.at("per_test")) {
        a.per_test.push_back({ArgumentTuple::from_json(t.at("arguments")),
                              Value::from_json(t.at("expected")), outcome_from_json(t.at("actual")),
                              t.at("passed").get<bool>()});
    }
    a.verdict = verdict_from_json(j.at("verdict"));
    a.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    return a;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
    std::time_t secs = static_cast<std::time_t>(ms / 1000);
    if (ms % 1000 < 0) --secs;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(((ms % 1000) + 1000) % 1000));
    return buf;
}

Timestamp parse_timestamp(std::string_view s) {
    std::tm tm{};
    int millis = 0;
    std::string str(s);
    if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon,
                    &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis) != 7)
        throw std::invalid_argument("bad timestamp: " + str);
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    auto secs = timegm(&tm);
    return Timestamp{std::chrono::seconds(secs) + std::chrono::milliseconds(millis)};
}

}  // namespace eipl
