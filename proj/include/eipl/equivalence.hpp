#pragma once

#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "eipl/model.hpp"
#include "eipl/sandbox.hpp"

namespace eipl {

/// Grading equality: numbers compare across int/float with a relative
/// tolerance (|a-b| <= tol * max(1, |a|, |b|)), booleans never equal numbers,
/// lists compare by length then elementwise.
bool value_equal(const Value& a, const Value& b, double float_tol = 1e-9);

/// Reference return values per question, computed once and then shared.
class ReferenceCache {
public:
    /// Throws HarnessError if the reference does not return on every vector.
    std::vector<Value> get(const Question& q, const Sandbox& sandbox, const ExecutionLimits& limits);
    std::size_t size() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, std::vector<Value>> values_;
};

struct Judgement {
    Verdict verdict;
    std::vector<TestResult> per_test;
};

/// Derives the verdict from per-test results: the first failing vector
/// decides the kind. Throws HarnessError on a HarnessFailure outcome.
Verdict verdict_from_results(const std::vector<TestResult>& per_test);

class Judge {
public:
    Judge(std::shared_ptr<const Sandbox> sandbox, ExecutionLimits limits = {},
          double float_tol = 1e-9);

    /// Runs the candidate over every test vector (stopping after a timeout)
    /// and compares against the cached reference values.
    Judgement judge(const std::string& candidate_source, const Question& q) const;

    std::vector<Value> reference_values(const Question& q) const;

    const Sandbox& sandbox() const { return *sandbox_; }
    const ExecutionLimits& limits() const { return limits_; }

private:
    std::shared_ptr<const Sandbox> sandbox_;
    ExecutionLimits limits_;
    double float_tol_;
    std::shared_ptr<ReferenceCache> cache_;
};

struct AgreementReport {
    std::string question_id;
    std::size_t vectors = 0;
    std::size_t agreements = 0;
    std::vector<std::string> disagreements;

    bool full_agreement() const { return vectors > 0 && agreements == vectors; }
    double rate() const { return vectors ? static_cast<double>(agreements) / vectors : 0.0; }
};

using Oracle = std::function<Value(const ArgumentTuple&)>;

/// Judges `candidate_source` over an enumerated input domain and compares
/// each per-vector pass/fail decision with an independent brute-force
/// decision: the oracle's expected value against the candidate's raw return
/// under exact structural equality.
AgreementReport oracle_check(const Judge& judge, const Question& q,
                             const std::vector<ArgumentTuple>& domain, const Oracle& oracle,
                             const std::string& candidate_source);

}  // namespace eipl
