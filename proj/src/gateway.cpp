#include "eipl/gateway.hpp"

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>

#include <httplib.h>

#include "eipl/io.hpp"
#include "eipl/model.hpp"

namespace eipl {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string fixture_key(std::string_view model_name, std::string_view prompt) {
    // Length-prefixed so (model, prompt) pairs cannot collide by concatenation.
    std::string material = std::to_string(model_name.size()) + ":";
    material.append(model_name);
    material.append(prompt);

    return sha256_hex(material);
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
    FixtureStore store;
    for (const auto& line : read_lines(path)) {
        FixtureEntry e;
        try {
            auto j = json::parse(line.text);
            e.key = j.at("key").get<std::string>();
            e.model = j.at("model").get<std::string>();
            e.prompt = j.at("prompt").get<std::string>();
            e.completion = j.at("completion").get<std::string>();
            e.timestamp = j.value("timestamp", std::string());
        } catch (const std::exception& ex) {
            throw FixtureParseError(line.number, ex.what());
        }
        if (e.key != fixture_key(e.model, e.prompt))
            throw FixtureParseError(line.number, "key does not match model and prompt");
        store.add(std::move(e));
    }
    return store;
}

void FixtureStore::add(FixtureEntry e) {
    auto key = e.key;
    entries_.emplace(std::move(key), std::move(e));
}

const FixtureEntry* FixtureStore::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

FixtureRecorder::FixtureRecorder(std::filesystem::path path) : path_(std::move(path)) {
    for (const auto& line : read_lines(path_)) {
        try {
            keys_.insert(json::parse(line.text).at("key").get<std::string>());
        } catch (const std::exception& ex) {
            throw FixtureParseError(line.number, ex.what());
        }
    }
}

bool FixtureRecorder::record(const CompletionRequest& req, const CompletionResult& result) {
    auto key = fixture_key(req.model_name, req.prompt);
    std::lock_guard lock(mu_);
    if (keys_.count(key)) return false;
    json j = {{"key", key},
              {"model", req.model_name},
              {"prompt", req.prompt},
              {"completion", result.text},
              {"timestamp", format_timestamp(std::chrono::system_clock::now())}};
    try {
        append_line_durable(path_, j.dump());
    } catch (const StorageFailure& e) {
        throw GatewayError(GatewayError::Kind::StorageFailure, e.what());
    }
    keys_.insert(std::move(key));
    return true;
}

CompletionResult ReplayBackend::complete(const CompletionRequest& req) {
    const auto* entry = store_.find(fixture_key(req.model_name, req.prompt));
    if (!entry) {
        throw GatewayError(GatewayError::Kind::ReplayMiss,
                           "no recorded completion for this prompt (model " + req.model_name + ")");
    }
    return {entry->completion, id(), Millis{0}, true};
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) {
    for (auto& r : responses) queue_.emplace_back(std::move(r));
}

void ScriptedBackend::push(std::string response) {
    std::lock_guard lock(mu_);
    queue_.emplace_back(std::move(response));
}

void ScriptedBackend::push_failure(GatewayError::Kind kind) {
    std::lock_guard lock(mu_);
    queue_.emplace_back(kind);
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& req) {
    std::lock_guard lock(mu_);
    prompts_.push_back(req.prompt);
    if (queue_.empty())
        throw GatewayError(GatewayError::Kind::MockExhausted, "scripted backend has no responses left");
    auto step = std::move(queue_.front());
    queue_.pop_front();
    if (auto* kind = std::get_if<GatewayError::Kind>(&step))
        throw GatewayError(*kind, "scripted failure");
    return {std::get<std::string>(std::move(step)), id(), Millis{0}, false};
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
}

std::vector<std::string> ScriptedBackend::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

HttpReply default_http_transport(const HttpCall& call) {
    // Split "scheme://host[:port]/path".
    auto scheme_end = call.url.find("://");
    if (scheme_end == std::string::npos) return {0, {}, "malformed endpoint url"};
    auto path_start = call.url.find('/', scheme_end + 3);
    std::string origin = call.url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : call.url.substr(path_start);

    httplib::Client client(origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(call.timeout).count();
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(call.timeout).count() % 1'000'000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    for (const auto& [k, v] : call.headers) headers.emplace(k, v);
    auto res = client.Post(path, headers, call.body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
}

LiveBackend::LiveBackend(LiveConfig config, HttpTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    config_.max_attempts = std::clamp(config_.max_attempts, 1, 3);
}

CompletionResult LiveBackend::complete(const CompletionRequest& req) {
    if (config_.api_key.empty())
        throw GatewayError(GatewayError::Kind::BackendUnavailable, "no API key configured");

    json body = {{"model", req.model_name},
                 {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_output_tokens}};
    HttpCall call{config_.endpoint,
                  {{"Authorization", "Bearer " + config_.api_key}},
                  body.dump(),
                  req.timeout};

    const auto start = Clock::now();
    const auto deadline = start + req.timeout * std::max(1, config_.max_attempts);
    auto backoff = config_.initial_backoff;
    std::string last_error = "no attempt made";

    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto remaining = std::chrono::duration_cast<Millis>(deadline - Clock::now());
        if (remaining <= Millis{0}) break;
        call.timeout = std::min(req.timeout, remaining);

        HttpReply reply = transport_(call);
        if (reply.status == 200) {
            try {
                auto j = json::parse(reply.body);
                std::string text = j.at("choices").at(0).at("message").at("content").get<std::string>();
                auto latency = std::chrono::duration_cast<Millis>(Clock::now() - start);
                return {std::move(text), id(), latency, false};
            } catch (const std::exception& e) {
                last_error = std::string("malformed provider response: ") + e.what();
            }
        } else if (reply.status == 0) {
            last_error = "transport error: " + reply.error;
        } else {
            last_error = "HTTP " + std::to_string(reply.status);
            bool transient = reply.status == 429 || reply.status >= 500;
            if (!transient) break;
        }

        if (attempt < config_.max_attempts) {
            auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now());
            auto pause = std::min(backoff, std::max(Millis{0}, left));
            std::this_thread::sleep_for(pause);
            backoff *= 2;
        }
    }
    throw GatewayError(GatewayError::Kind::BackendUnavailable, last_error);
}

CompletionResult RecordingBackend::complete(const CompletionRequest& req) {
    auto result = inner_->complete(req);
    recorder_.record(req, result);
    return result;
}

}  // namespace eipl
