#include "eipl/config.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "eipl/io.hpp"

#ifndef EIPL_DATA_DIR
#define EIPL_DATA_DIR "data"
#endif

namespace eipl {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

AppConfig AppConfig::load(const std::filesystem::path& path) {
    AppConfig c;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const StorageFailure& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path.string() + ": top level must be an object");
    const auto base = path.parent_path();

    try {
        if (auto it = j.find("limits"); it != j.end()) {
            std::int64_t wall = c.limits.wall_timeout.count();
            read_opt(*it, "wall_timeout_ms", wall);
            c.limits.wall_timeout = std::chrono::milliseconds(wall);
            read_opt(*it, "memory_cap_bytes", c.limits.memory_cap);
            read_opt(*it, "max_stdout_bytes", c.limits.max_stdout);
        }
        if (auto it = j.find("policy"); it != j.end()) {
            read_opt(*it, "attempt_cap", c.policy.attempt_cap);
            read_opt(*it, "allow_after_correct", c.policy.allow_after_correct);
        }
        if (auto it = j.find("llm"); it != j.end()) {
            read_opt(*it, "endpoint", c.live.endpoint);
            read_opt(*it, "model", c.model_name);
            read_opt(*it, "temperature", c.temperature);
            read_opt(*it, "max_output_tokens", c.max_output_tokens);
            std::int64_t timeout = c.request_timeout.count();
            read_opt(*it, "timeout_ms", timeout);
            c.request_timeout = Millis(timeout);
            read_opt(*it, "max_attempts", c.live.max_attempts);
            std::int64_t backoff = c.live.initial_backoff.count();
            read_opt(*it, "initial_backoff_ms", backoff);
            c.live.initial_backoff = Millis(backoff);
        }
        if (auto it = j.find("sandbox"); it != j.end()) {
            std::string runtime;
            read_opt(*it, "runtime", runtime);
            if (!runtime.empty()) c.sandbox.runtime = runtime;
            read_opt(*it, "max_children", c.max_children);
        }
        if (auto it = j.find("langtag"); it != j.end()) {
            std::string p;
            read_opt(*it, "lexicon", p);
            if (!p.empty()) c.lexicon_path = resolve(base, p);
            p.clear();
            read_opt(*it, "technical", p);
            if (!p.empty()) c.technical_path = resolve(base, p);
            read_opt(*it, "threshold", c.english_threshold);
        }
        std::string tmpl;
        read_opt(j, "prompt_template", tmpl);
        if (!tmpl.empty()) c.prompt_template_path = resolve(base, tmpl);
        read_opt(j, "float_tolerance", c.float_tolerance);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    c.validate();
    return c;
}

void AppConfig::apply_environment() {
    if (const char* key = std::getenv(kApiKeyEnv)) live.api_key = key;
}

void AppConfig::validate() const {
    if (limits.wall_timeout.count() <= 0) throw ConfigError("wall_timeout_ms must be positive");
    if (limits.memory_cap == 0) throw ConfigError("memory_cap_bytes must be positive");
    if (limits.max_stdout == 0) throw ConfigError("max_stdout_bytes must be positive");
    if (policy.attempt_cap < 1) throw ConfigError("attempt_cap must be at least 1");
    if (temperature < 0) throw ConfigError("temperature must be non-negative");
    if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be positive");
    if (request_timeout.count() <= 0) throw ConfigError("timeout_ms must be positive");
    if (max_children < 1) throw ConfigError("max_children must be positive");
    if (english_threshold < 0 || english_threshold > 1) throw ConfigError("threshold must lie in [0, 1]");
    if (float_tolerance < 0) throw ConfigError("float_tolerance must be non-negative");
}

std::filesystem::path default_data_dir() {
    if (const char* dir = std::getenv("EIPL_DATA_DIR")) return dir;
    return EIPL_DATA_DIR;
}

}  // namespace eipl
