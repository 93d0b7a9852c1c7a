#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace eipl {

using Millis = std::chrono::milliseconds;

struct CompletionRequest {
    std::string prompt;
    std::string model_name = "gpt-4o";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    Millis timeout{60'000};
};

struct CompletionResult {
    std::string text;
    std::string backend_id;
    Millis latency{0};
    bool from_cache = false;
};

class GatewayError : public std::runtime_error {
public:
    enum class Kind { BackendUnavailable, ReplayMiss, MockExhausted, StorageFailure };
    GatewayError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class FixtureParseError : public std::runtime_error {
public:
    FixtureParseError(std::size_t line, const std::string& what)
        : std::runtime_error("fixture line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Fixture key: hex SHA-256 over the model name and prompt.
std::string fixture_key(std::string_view model_name, std::string_view prompt);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Safe to call from several threads.
    virtual CompletionResult complete(const CompletionRequest& req) = 0;
    virtual std::string id() const = 0;
};

struct FixtureEntry {
    std::string key;
    std::string model;
    std::string prompt;
    std::string completion;
    std::string timestamp;
};

/// Read-only view of a line-delimited fixture file.
class FixtureStore {
public:
    FixtureStore() = default;
    /// A missing file is an empty store. Throws FixtureParseError on the first
    /// malformed line (1-based).
    static FixtureStore load(const std::filesystem::path& path);

    void add(FixtureEntry e);  // first write wins
    const FixtureEntry* find(const std::string& key) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, FixtureEntry> entries_;
};

/// Append-only fixture writer; one writer serializes all appends.
class FixtureRecorder {
public:
    explicit FixtureRecorder(std::filesystem::path path);

    /// Returns false when an entry with the same key already exists.
    /// Throws GatewayError(StorageFailure) if the append fails.
    bool record(const CompletionRequest& req, const CompletionResult& result);

private:
    std::filesystem::path path_;
    std::mutex mu_;
    std::set<std::string> keys_;
};

class ReplayBackend final : public CompletionBackend {
public:
    explicit ReplayBackend(FixtureStore store) : store_(std::move(store)) {}
    CompletionResult complete(const CompletionRequest& req) override;
    std::string id() const override { return "replay"; }

private:
    FixtureStore store_;
};

/// Test double answering from a queue of canned responses.
class ScriptedBackend final : public CompletionBackend {
public:
    using Step = std::variant<std::string, GatewayError::Kind>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> responses);

    void push(std::string response);
    void push_failure(GatewayError::Kind kind);

    CompletionResult complete(const CompletionRequest& req) override;
    std::string id() const override { return "mock"; }

    std::size_t calls() const;
    std::vector<std::string> prompts() const;

private:
    mutable std::mutex mu_;
    std::deque<Step> queue_;
    std::vector<std::string> prompts_;
};

struct HttpCall {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    Millis timeout{60'000};
};

struct HttpReply {
    int status = 0;  // 0: transport-level failure
    std::string body;
    std::string error;
};

using HttpTransport = std::function<HttpReply(const HttpCall&)>;

/// Blocking HTTPS POST through cpp-httplib.
HttpReply default_http_transport(const HttpCall& call);

struct LiveConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key;
    int max_attempts = 3;
    Millis initial_backoff{500};
};

/// Hosted chat-completions backend. The prompt is sent as a single user
/// message. Transient failures are retried with exponential backoff; the
/// whole call never exceeds max_attempts x request timeout.
class LiveBackend final : public CompletionBackend {
public:
    explicit LiveBackend(LiveConfig config, HttpTransport transport = default_http_transport);
    CompletionResult complete(const CompletionRequest& req) override;
    std::string id() const override { return "live"; }

private:
    LiveConfig config_;
    HttpTransport transport_;
};

/// Decorator that appends every successful completion to a fixture file.
class RecordingBackend final : public CompletionBackend {
public:
    RecordingBackend(std::shared_ptr<CompletionBackend> inner, std::filesystem::path fixture_path)
        : inner_(std::move(inner)), recorder_(std::move(fixture_path)) {}
    CompletionResult complete(const CompletionRequest& req) override;
    std::string id() const override { return inner_->id() + "+record"; }

private:
    std::shared_ptr<CompletionBackend> inner_;
    FixtureRecorder recorder_;
};

}  // namespace eipl
