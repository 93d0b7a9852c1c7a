#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "eipl/model.hpp"

namespace eipl {

struct ExecutionLimits {
    std::chrono::milliseconds wall_timeout{5000};  // per test vector
    std::size_t memory_cap = 256u << 20;           // address-space bytes
    std::size_t max_stdout = 64u << 10;            // captured printed output
};

/// Raised when the runtime itself cannot be started or misbehaves in a way
/// that is not attributable to the candidate.
class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Counting semaphore whose capacity can be adjusted at startup.
class ChildSlots {
public:
    explicit ChildSlots(int capacity) : capacity_(capacity) {}
    void acquire();
    void release();
    void set_capacity(int capacity);
    int capacity() const;

    static ChildSlots& global();  // default capacity 4

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int capacity_;
    int in_use_ = 0;
};

enum class SignatureStatus { Ok, Mismatch, LoadFailed };

struct ProbeResult {
    SignatureStatus status = SignatureStatus::Ok;
    std::string detail;
};

struct SandboxConfig {
    /// Interpreter; a bare name is resolved on PATH.
    std::filesystem::path runtime = "python3";
};

/// Runs untrusted Python in one short-lived child process per call. Each
/// child gets a private working directory holding only the harness shim,
/// rlimits on address space, CPU time and file size, a scrubbed environment,
/// and an audit hook that denies file access outside the standard library,
/// sockets and process creation.
class Sandbox {
public:
    explicit Sandbox(SandboxConfig config = {});

    const std::filesystem::path& runtime() const { return runtime_; }

    /// One Outcome per vector, in order. Start-up failures of the runtime are
    /// reported as Outcome::HarnessFailure entries.
    std::vector<Outcome> run_candidate(const std::string& source, const std::string& function_name,
                                       const std::vector<ArgumentTuple>& vectors,
                                       const ExecutionLimits& limits = {}) const;

    Outcome run_one(const std::string& source, const std::string& function_name,
                    const ArgumentTuple& args, const ExecutionLimits& limits = {}) const;

    /// Checks that `function_name` accepts `arity` positional arguments without
    /// calling it. Throws HarnessError if the runtime cannot start.
    ProbeResult probe_signature(const std::string& source, const std::string& function_name,
                                std::size_t arity, const ExecutionLimits& limits = {}) const;

private:
    std::filesystem::path runtime_;
};

}  // namespace eipl
