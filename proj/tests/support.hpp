#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "eipl/bank.hpp"
#include "eipl/io.hpp"

namespace eipl::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(EIPL_FIXTURE_DIR) / name;
}

inline std::filesystem::path repo_data() { return EIPL_REPO_DATA_DIR; }

inline nlohmann::json load_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

inline const QuestionBank& repo_bank() {
    static const QuestionBank bank = QuestionBank::load_dir(repo_data() / "bank");
    return bank;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "eipl-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

}  // namespace eipl::testing
