#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eipl {

class StorageFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Appends `line` plus a newline and fsyncs before returning.
/// Throws StorageFailure on any I/O error.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

/// Writes the file atomically (temp file + rename). Throws StorageFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

struct LineRecord {
    std::size_t number;  // 1-based
    std::string text;
    bool terminated;     // false only for a trailing line without '\n'
};

/// Drops an unterminated final line left by an interrupted append.
/// Throws StorageFailure if the file cannot be truncated.
void truncate_torn_tail(const std::filesystem::path& path);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Splits a file into lines; empty lines are skipped. A missing file yields
/// no lines.
std::vector<LineRecord> read_lines(const std::filesystem::path& path);

}  // namespace eipl
