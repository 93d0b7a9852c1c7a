#include "eipl/bank.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace eipl {

namespace fs = std::filesystem;

QuestionBank::QuestionBank(std::vector<Question> questions) : questions_(std::move(questions)) {
    auto violations = validate_bank(questions_);
    if (!violations.empty()) {
        std::string msg = "invalid question bank:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw BankError(msg);
    }
}

const Question* QuestionBank::find(std::string_view id) const {
    auto it = std::find_if(questions_.begin(), questions_.end(),
                           [&](const Question& q) { return q.id == id; });
    return it == questions_.end() ? nullptr : &*it;
}

Question load_question_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw BankError("cannot open question file " + path.string());
    try {
        return question_from_json(nlohmann::json::parse(in));
    } catch (const std::exception& e) {
        throw BankError(path.filename().string() + ": " + e.what());
    }
}

void save_question_file(const Question& q, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw BankError("cannot write question file " + path.string());
    out << to_json(q).dump(2) << '\n';
}

QuestionBank QuestionBank::load_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    if (fs::is_directory(dir, ec)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Question> questions;
    questions.reserve(files.size());
    for (const auto& f : files) questions.push_back(load_question_file(f));
    return QuestionBank(std::move(questions));
}

CourseProfile CourseProfile::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw BankError("cannot open profile " + path.string());
    CourseProfile p;
    try {
        auto j = nlohmann::json::parse(in);
        p.name = j.value("name", path.stem().string());
        for (const auto& e : j.at("questions")) {
            p.entries.push_back({e.at("id").get<std::string>(),
                                 instruction_mode_from(e.at("mode").get<std::string>())});
        }
    } catch (const std::exception& e) {
        throw BankError(path.filename().string() + ": " + e.what());
    }
    return p;
}

QuestionBank apply_profile(const QuestionBank& bank, const CourseProfile& profile) {
    std::vector<Question> selected;
    for (const auto& entry : profile.entries) {
        const Question* q = bank.find(entry.question_id);
        if (!q) throw BankError("profile references unknown question " + entry.question_id);
        Question copy = *q;
        copy.instruction_language_mode = entry.mode;
        selected.push_back(std::move(copy));
    }
    return QuestionBank(std::move(selected));
}

}  // namespace eipl
