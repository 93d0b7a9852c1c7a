#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eipl/bank.hpp"
#include "eipl/grader.hpp"
#include "eipl/model.hpp"

namespace eipl {

/// Languages accepted in a translation dataset, in report column order.
const std::vector<std::string>& declared_languages();

class DatasetError : public std::runtime_error {
public:
    enum class Kind { Parse, UnknownQuestion, UnknownLanguage };
    DatasetError(Kind kind, std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), kind_(kind), row_(row) {}
    Kind kind() const { return kind_; }
    std::size_t row() const { return row_; }

private:
    Kind kind_;
    std::size_t row_;
};

struct DatasetRow {
    std::size_t row = 0;  // 1-based line number in the source file
    std::string language;
    std::string question_id;
    std::string response_text;
    std::optional<std::string> respondent_id;
};

/// Line-delimited JSON: {"language", "question_id", "response_text",
/// "respondent_id"?} per line. Duplicate (respondent, question) rows are kept.
struct TranslationDataset {
    std::vector<DatasetRow> rows;

    static TranslationDataset load(const std::filesystem::path& path, const QuestionBank& bank,
                                   const std::vector<std::string>& languages = declared_languages());
};

/// Graded result of one dataset row, as persisted in the outcomes file.
struct RowOutcome {
    std::size_t row = 0;
    std::string language;
    std::string question_id;
    std::optional<std::string> respondent_id;
    std::string fingerprint;  // hash of (language, question, response)
    Verdict verdict;
    std::string raw_completion;
    std::optional<std::string> extracted_code;
    /// Infrastructure failure (backend or harness); the row is graded again
    /// when the batch resumes.
    bool retriable = false;
};

nlohmann::json to_json(const RowOutcome& o);
RowOutcome row_outcome_from_json(const nlohmann::json& j);

std::string row_fingerprint(const DatasetRow& r);

/// Reads an outcomes file; a torn final line is ignored. Throws StorageFailure
/// on corrupt records elsewhere.
std::vector<RowOutcome> load_outcomes(const std::filesystem::path& path);

struct BatchOptions {
    int concurrency = 4;
    /// Called after each row is persisted (row index into the dataset).
    std::function<void(std::size_t)> on_row_done;
};

struct BatchResult {
    std::vector<RowOutcome> outcomes;  // one per dataset row, dataset order
    std::size_t graded = 0;            // rows graded in this run
    std::size_t resumed = 0;           // rows taken from an earlier run
    std::size_t harness_failures = 0;  // rows left retriable because of the sandbox
};

/// Grades every row with language_name = row.language, appending each
/// outcome durably to `outcomes_path` as soon as it is known. Rows already
/// present (same row number and fingerprint, not retriable) are not graded
/// again. Per-row failures are recorded and never abort the batch.
BatchResult run_batch(const TranslationDataset& dataset, const QuestionBank& bank,
                      const GradingPipeline& pipeline, const std::filesystem::path& outcomes_path,
                      const BatchOptions& options = {});

enum class Bucket { Purple, LightBlue, Green, Yellow, Grey };

std::string_view to_string(Bucket b);

/// Grey when total is 0; otherwise half-open bands [0,25) Yellow, [25,50)
/// Green, [50,75) LightBlue and [75,100] Purple on the exact rate.
Bucket bucket_of(std::int64_t passed, std::int64_t total);

struct Cell {
    std::int64_t passed = 0;
    std::int64_t total = 0;
    bool operator==(const Cell&) const = default;
};

struct MatrixQuestion {
    std::string id;
    std::string title;
    SegmentLanguage segment = SegmentLanguage::Python;
};

class CorrectnessMatrix {
public:
    CorrectnessMatrix() = default;
    CorrectnessMatrix(std::vector<std::string> languages, std::vector<MatrixQuestion> questions);

    /// Columns follow the bank's declared languages, rows the bank's questions.
    static CorrectnessMatrix for_bank(const QuestionBank& bank,
                                      const std::vector<std::string>& languages = declared_languages());

    const std::vector<std::string>& languages() const { return languages_; }
    const std::vector<MatrixQuestion>& questions() const { return questions_; }

    void add(const std::string& language, const std::string& question_id, bool passed);
    void set(const std::string& language, const std::string& question_id, Cell c);

    Cell cell(const std::string& language, const std::string& question_id) const;
    Cell total(const std::string& language) const;
    Bucket bucket(const std::string& language, const std::string& question_id) const;
    std::string cell_text(const std::string& language, const std::string& question_id) const;
    std::string total_text(const std::string& language) const;

private:
    void ensure_column(const std::string& language);
    void ensure_row(const std::string& question_id);

    std::vector<std::string> languages_;
    std::vector<MatrixQuestion> questions_;
    std::map<std::pair<std::string, std::string>, Cell> cells_;
};

/// Only Correct counts as passed; every other verdict is a failure.
/// Unknown languages or questions get their own column or row.
CorrectnessMatrix aggregate(const std::vector<RowOutcome>& outcomes, CorrectnessMatrix base);

/// Delimited table: one line per (language, question) plus one totals line
/// per language.
std::string render_csv(const CorrectnessMatrix& m);

/// Static page laid out like the printed table, cells tinted by bucket.
std::string render_html(const CorrectnessMatrix& m);

/// Writes `correctness.csv` and `correctness.html` into `dir`. Throws
/// StorageFailure.
void render_report(const CorrectnessMatrix& m, const std::filesystem::path& dir);

}  // namespace eipl
