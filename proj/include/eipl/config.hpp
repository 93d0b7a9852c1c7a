#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "eipl/gateway.hpp"
#include "eipl/model.hpp"
#include "eipl/sandbox.hpp"

namespace eipl {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Environment variable holding the hosted-LLM API key.
inline constexpr const char* kApiKeyEnv = "EIPL_LLM_API_KEY";

/// Runtime settings, read from a JSON file. Every key is optional:
///
///   {"limits":   {"wall_timeout_ms", "memory_cap_bytes", "max_stdout_bytes"},
///    "policy":   {"attempt_cap", "allow_after_correct"},
///    "llm":      {"endpoint", "model", "temperature", "max_output_tokens",
///                 "timeout_ms", "max_attempts", "initial_backoff_ms"},
///    "sandbox":  {"runtime", "max_children"},
///    "langtag":  {"lexicon", "technical", "threshold"},
///    "prompt_template": "<path>",
///    "float_tolerance": 1e-9}
struct AppConfig {
    ExecutionLimits limits;
    AttemptPolicy policy;
    LiveConfig live;
    std::string model_name = "gpt-4o";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    Millis request_timeout{60'000};
    SandboxConfig sandbox;
    int max_children = 4;
    std::optional<std::filesystem::path> lexicon_path;
    std::optional<std::filesystem::path> technical_path;
    double english_threshold = 0.8;
    std::optional<std::filesystem::path> prompt_template_path;
    double float_tolerance = 1e-9;

    /// Throws ConfigError on unreadable files, malformed JSON or values out of
    /// range. Relative paths are resolved against the file's directory.
    static AppConfig load(const std::filesystem::path& path);

    /// Fills live.api_key from the environment.
    void apply_environment();

    /// Throws ConfigError unless all limits are positive and attempt_cap >= 1.
    void validate() const;
};

/// Directory holding the bundled bank, profiles and lexicon.
std::filesystem::path default_data_dir();

}  // namespace eipl
