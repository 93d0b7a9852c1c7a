#include "eipl/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace eipl {

bool value_equal(const Value& a, const Value& b, double float_tol) {
    if (a.is_bool() || b.is_bool()) return a.is_bool() && b.is_bool() && a.as_bool() == b.as_bool();
    if (a.is_number() && b.is_number()) {
        if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
        const double x = a.as_number(), y = b.as_number();
        const double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
        return std::fabs(x - y) <= float_tol * scale;
    }
    if (a.is_none() || b.is_none()) return a.is_none() && b.is_none();
    if (a.is_text() || b.is_text()) return a.is_text() && b.is_text() && a.as_text() == b.as_text();
    if (a.is_list() && b.is_list()) {
        const auto& x = a.as_list();
        const auto& y = b.as_list();
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!value_equal(x[i], y[i], float_tol)) return false;
        return true;
    }
    return false;
}

namespace {

std::string cache_key(const Question& q) {
    std::string material = q.reference_source;
    for (const auto& t : q.test_vectors) material += '\x1f' + t.to_json().dump();
    return q.id + "#" + std::to_string(std::hash<std::string>{}(material));
}

}  // namespace

std::vector<Value> ReferenceCache::get(const Question& q, const Sandbox& sandbox,
                                       const ExecutionLimits& limits) {
    const auto key = cache_key(q);
    {
        std::shared_lock lock(mu_);
        if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    if (auto it = values_.find(key); it != values_.end()) return it->second;

    auto outcomes = sandbox.run_candidate(q.reference_source, "foo", q.test_vectors, limits);
    std::vector<Value> values;
    values.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].returned()) {
            throw HarnessError("reference solution of " + q.id + " failed on vector " +
                               std::to_string(i) + ": " + outcomes[i].describe());
        }
        values.push_back(outcomes[i].value());
    }
    values_.emplace(key, values);
    return values;
}

std::size_t ReferenceCache::size() const {
    std::shared_lock lock(mu_);
    return values_.size();
}

Verdict verdict_from_results(const std::vector<TestResult>& per_test) {
    for (std::size_t i = 0; i < per_test.size(); ++i) {
        const auto& t = per_test[i];
        if (t.passed) continue;
        // Arguments stay out of the text so the detail can be shown to students.
        const std::string where = "vector " + std::to_string(i);
        const auto& r = t.actual.result;
        if (std::holds_alternative<Outcome::Returned>(r)) {
            return Verdict::make_incorrect(
                i, where + ": expected " + t.expected.to_literal() + ", got " + t.actual.describe());
        }
        if (auto* raised = std::get_if<Outcome::Raised>(&r))
            return Verdict::make(VerdictKind::RuntimeError, where + ": " + raised->error);
        if (std::holds_alternative<Outcome::TimedOut>(r))
            return Verdict::make(VerdictKind::Timeout, where + ": time limit exceeded");
        if (std::holds_alternative<Outcome::MemoryExceeded>(r))
            return Verdict::make(VerdictKind::RuntimeError, where + ": memory limit exceeded");
        throw HarnessError(std::get<Outcome::HarnessFailure>(r).reason);
    }
    return Verdict::make_correct();
}

Judge::Judge(std::shared_ptr<const Sandbox> sandbox, ExecutionLimits limits, double float_tol)
    : sandbox_(std::move(sandbox)),
      limits_(limits),
      float_tol_(float_tol),
      cache_(std::make_shared<ReferenceCache>()) {}

std::vector<Value> Judge::reference_values(const Question& q) const {
    return cache_->get(q, *sandbox_, limits_);
}

Judgement Judge::judge(const std::string& candidate_source, const Question& q) const {
    const auto expected = reference_values(q);
    Judgement j;
    j.per_test.reserve(q.test_vectors.size());
    for (std::size_t i = 0; i < q.test_vectors.size(); ++i) {
        TestResult t;
        t.arguments = q.test_vectors[i];
        t.expected = expected[i];
        t.actual = sandbox_->run_one(candidate_source, "foo", q.test_vectors[i], limits_);
        if (auto* hf = std::get_if<Outcome::HarnessFailure>(&t.actual.result))
            throw HarnessError(hf->reason);
        t.passed = t.actual.returned() && value_equal(t.actual.value(), t.expected, float_tol_);
        const bool timed_out = std::holds_alternative<Outcome::TimedOut>(t.actual.result);
        j.per_test.push_back(std::move(t));
        if (timed_out) break;
    }
    j.verdict = verdict_from_results(j.per_test);
    return j;
}

AgreementReport oracle_check(const Judge& judge, const Question& q,
                             const std::vector<ArgumentTuple>& domain, const Oracle& oracle,
                             const std::string& candidate_source) {
    Question enumerated = q;
    enumerated.test_vectors = domain;
    const auto judgement = judge.judge(candidate_source, enumerated);

    AgreementReport report;
    report.question_id = q.id;
    report.vectors = domain.size();
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const Value expected = oracle(domain[i]);
        bool judge_pass = i < judgement.per_test.size() && judgement.per_test[i].passed;
        bool oracle_pass = i < judgement.per_test.size() && judgement.per_test[i].actual.returned() &&
                           judgement.per_test[i].actual.value() == expected;
        if (judge_pass == oracle_pass) {
            ++report.agreements;
        } else {
            report.disagreements.push_back(domain[i].to_literal() + ": judge " +
                                           (judge_pass ? "pass" : "fail") + ", oracle " +
                                           (oracle_pass ? "pass" : "fail"));
        }
    }
    return report;
}

}  // namespace eipl
