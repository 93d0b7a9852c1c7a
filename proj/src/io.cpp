#include "eipl/io.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace eipl {

namespace {

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path) {
    throw StorageFailure(what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            fail("write", path);
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

}  // namespace

void append_line_durable(const std::filesystem::path& path, std::string_view line) {
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) fail("open", path);
    std::string buf(line);
    buf += '\n';
    write_all(fd, buf, path);
    if (::fsync(fd) != 0) {
        ::close(fd);
        fail("fsync", path);
    }
    ::close(fd);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail("open", tmp);
    write_all(fd, contents, tmp);
    if (::fsync(fd) != 0) {
        ::close(fd);
        fail("fsync", tmp);
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) fail("rename", path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageFailure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<LineRecord> read_lines(const std::filesystem::path& path) {
    std::vector<LineRecord> lines;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return lines;
    const std::string data = read_file(path);
    std::size_t start = 0, number = 1;
    while (start < data.size()) {
        auto nl = data.find('\n', start);
        bool terminated = nl != std::string::npos;
        auto end = terminated ? nl : data.size();
        std::string text = data.substr(start, end - start);
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (!text.empty()) lines.push_back({number, std::move(text), terminated});
        ++number;
        start = end + 1;
    }
    return lines;
}

void truncate_torn_tail(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return;
    const std::string data = read_file(path);
    if (data.empty() || data.back() == '\n') return;
    auto keep = data.rfind('\n');
    keep = keep == std::string::npos ? 0 : keep + 1;
    if (::truncate(path.c_str(), static_cast<off_t>(keep)) != 0) fail("truncate", path);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("EVP_Digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 0xf];
    }
    return hex;
}

}  // namespace eipl
