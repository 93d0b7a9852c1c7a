#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eipl/model.hpp"

namespace eipl {

class BankError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable set of questions, one JSON file per question on disk.
class QuestionBank {
public:
    QuestionBank() = default;
    explicit QuestionBank(std::vector<Question> questions);

    /// Loads every `*.json` file in `dir` (sorted by file name). A missing or
    /// empty directory yields an empty bank. Throws BankError on parse
    /// failures or invariant violations.
    static QuestionBank load_dir(const std::filesystem::path& dir);

    const std::vector<Question>& questions() const { return questions_; }
    const Question* find(std::string_view id) const;
    bool empty() const { return questions_.empty(); }
    std::size_t size() const { return questions_.size(); }

private:
    std::vector<Question> questions_;
};

Question load_question_file(const std::filesystem::path& path);
void save_question_file(const Question& q, const std::filesystem::path& path);

/// A deployment profile selects an ordered subset of the bank and assigns
/// each selected question its instruction language mode.
struct CourseProfile {
    struct Entry {
        std::string question_id;
        InstructionMode mode = InstructionMode::Free;
    };
    std::string name;
    std::vector<Entry> entries;

    static CourseProfile load(const std::filesystem::path& path);
};

/// Throws BankError if the profile references an unknown question.
QuestionBank apply_profile(const QuestionBank& bank, const CourseProfile& profile);

}  // namespace eipl
