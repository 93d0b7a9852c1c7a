#include "eipl/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "harness_source.hpp"

namespace eipl {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

void ChildSlots::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < capacity_; });
    ++in_use_;
}

void ChildSlots::release() {
    {
        std::lock_guard lock(mu_);
        --in_use_;
    }
    cv_.notify_one();
}

void ChildSlots::set_capacity(int capacity) {
    {
        std::lock_guard lock(mu_);
        capacity_ = std::max(1, capacity);
    }
    cv_.notify_all();
}

int ChildSlots::capacity() const {
    std::lock_guard lock(mu_);
    return capacity_;
}

ChildSlots& ChildSlots::global() {
    static ChildSlots slots(4);
    return slots;
}

namespace {

constexpr std::size_t kOutcomeAllowance = 8u << 20;
constexpr std::size_t kStderrCap = 64u << 10;

struct SlotGuard {
    explicit SlotGuard(ChildSlots& s) : slots(s) { slots.acquire(); }
    ~SlotGuard() { slots.release(); }
    ChildSlots& slots;
};

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        reset();
        fd_ = std::exchange(o.fd_, -1);
        return *this;
    }
    ~Fd() { reset(); }
    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read, write;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0)
        throw HarnessError(std::string("pipe: ") + std::strerror(errno));
    return {Fd(fds[0]), Fd(fds[1])};
}

// Private working directory containing only the harness shim.
class WorkDir {
public:
    WorkDir() {
        auto tmpl = (fs::temp_directory_path() / "eipl-sandbox-XXXXXX").string();
        if (!::mkdtemp(tmpl.data()))
            throw HarnessError(std::string("mkdtemp: ") + std::strerror(errno));
        path_ = tmpl;
        std::ofstream out(path_ / "harness.py", std::ios::binary);
        out << detail::kHarnessSource;
        if (!out) throw HarnessError("cannot write harness shim");
    }
    ~WorkDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string make_nonce() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s = "@@eipl:";
    for (int i = 0; i < 32; ++i) s += kHex[rng() & 0xf];
    return s + "@@";
}

fs::path resolve_runtime(const fs::path& runtime) {
    if (runtime.has_parent_path()) return runtime;
    const char* path_env = std::getenv("PATH");
    std::string_view dirs = path_env ? path_env : "/usr/bin:/bin";
    while (!dirs.empty()) {
        auto colon = dirs.find(':');
        auto dir = dirs.substr(0, colon);
        auto candidate = fs::path(dir) / runtime;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate;
        if (colon == std::string_view::npos) break;
        dirs.remove_prefix(colon + 1);
    }
    return runtime;
}

struct ChildResult {
    bool timed_out = false;
    bool exec_failed = false;
    int exec_errno = 0;
    int wait_status = 0;
    std::string out;
    std::string err;
};

void set_limit(int resource, rlim_t value) {
    rlimit rl{value, value};
    ::setrlimit(resource, &rl);
}

ChildResult spawn_and_collect(const fs::path& runtime, const fs::path& workdir,
                              const std::string& input, const ExecutionLimits& limits) {
    Pipe in = make_pipe(), out = make_pipe(), err = make_pipe(), status = make_pipe();

    // Everything the child touches is prepared before fork.
    const std::string runtime_str = runtime.string();
    const std::string workdir_str = workdir.string();
    std::array<const char*, 7> argv{runtime_str.c_str(), "-I", "-S", "-B", "harness.py", nullptr};
    std::array<const char*, 4> envp{"PATH=/usr/bin:/bin", "LC_ALL=C.UTF-8", "HOME=/nonexistent",
                                    nullptr};
    const auto cpu_secs = static_cast<rlim_t>(
        std::chrono::duration_cast<std::chrono::seconds>(limits.wall_timeout).count() + 1);
    const auto mem = static_cast<rlim_t>(limits.memory_cap);

    const auto start = Clock::now();
    pid_t pid = ::fork();
    if (pid < 0) throw HarnessError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::setsid();
        ::dup2(in.read.get(), 0);
        ::dup2(out.write.get(), 1);
        ::dup2(err.write.get(), 2);
        int status_fd = status.write.get();
        for (int fd = 3; fd < 1024; ++fd)
            if (fd != status_fd) ::close(fd);
        int rc = ::chdir(workdir_str.c_str());
        if (rc == 0) {
            set_limit(RLIMIT_AS, mem);
            set_limit(RLIMIT_CPU, cpu_secs);
            set_limit(RLIMIT_FSIZE, 1u << 20);
            set_limit(RLIMIT_CORE, 0);
            set_limit(RLIMIT_NOFILE, 64);
            ::execve(argv[0], const_cast<char* const*>(argv.data()),
                     const_cast<char* const*>(envp.data()));
        }
        int e = errno;
        [[maybe_unused]] auto n = ::write(status_fd, &e, sizeof(e));
        ::_exit(127);
    }

    in.read.reset();
    out.write.reset();
    err.write.reset();
    status.write.reset();

    ChildResult result;
    int exec_errno = 0;
    if (::read(status.read.get(), &exec_errno, sizeof(exec_errno)) == sizeof(exec_errno)) {
        result.exec_failed = true;
        result.exec_errno = exec_errno;
        ::waitpid(pid, &result.wait_status, 0);
        return result;
    }

    ::fcntl(in.write.get(), F_SETFL, O_NONBLOCK);
    std::size_t written = 0;
    const auto deadline = start + limits.wall_timeout;
    const std::size_t out_cap = limits.max_stdout + kOutcomeAllowance;
    bool out_open = true, err_open = true;
    char buf[65536];

    auto kill_child = [&] {
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
    };

    while (out_open || err_open) {
        auto now = Clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            break;
        }
        std::array<pollfd, 3> fds{};
        nfds_t n = 0;
        int out_idx = -1, err_idx = -1, in_idx = -1;
        if (out_open) { fds[n] = {out.read.get(), POLLIN, 0}; out_idx = static_cast<int>(n++); }
        if (err_open) { fds[n] = {err.read.get(), POLLIN, 0}; err_idx = static_cast<int>(n++); }
        if (in.write.get() >= 0) { fds[n] = {in.write.get(), POLLOUT, 0}; in_idx = static_cast<int>(n++); }
        auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        int rc = ::poll(fds.data(), n, static_cast<int>(std::max<long long>(1, wait_ms)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            kill_child();
            ::waitpid(pid, nullptr, 0);
            throw HarnessError(std::string("poll: ") + std::strerror(errno));
        }
        if (in_idx >= 0 && fds[in_idx].revents) {
            if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
                in.write.reset();
            } else {
                ssize_t w = ::write(in.write.get(), input.data() + written, input.size() - written);
                if (w > 0) written += static_cast<std::size_t>(w);
                else if (w < 0 && errno != EAGAIN && errno != EINTR) in.write.reset();
                if (written == input.size()) in.write.reset();
            }
        }
        auto drain = [&](int idx, Fd& fd, std::string& sink, std::size_t cap, bool& open) {
            if (idx < 0 || !fds[idx].revents) return;
            ssize_t r = ::read(fd.get(), buf, sizeof(buf));
            if (r > 0) {
                if (sink.size() < cap)
                    sink.append(buf, std::min<std::size_t>(static_cast<std::size_t>(r), cap - sink.size()));
            } else if (r == 0 || (errno != EINTR && errno != EAGAIN)) {
                open = false;
            }
        };
        drain(out_idx, out.read, result.out, out_cap, out_open);
        drain(err_idx, err.read, result.err, kStderrCap, err_open);
    }
    in.write.reset();

    // Pipes closed; the child may still be running (it can close its own fds).
    while (!result.timed_out) {
        pid_t w = ::waitpid(pid, &result.wait_status, WNOHANG);
        if (w == pid) return result;
        if (Clock::now() >= deadline) {
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    kill_child();
    ::waitpid(pid, &result.wait_status, 0);
    return result;
}

// Finds the harness report (last line starting with the nonce).
std::optional<json> find_report(const std::string& out, const std::string& nonce) {
    auto pos = out.rfind(nonce);
    if (pos == std::string::npos) return std::nullopt;
    auto end = out.find('\n', pos);
    try {
        return json::parse(out.substr(pos + nonce.size(), end == std::string::npos ? end : end - pos - nonce.size()));
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::string describe_exit(int status) {
    if (WIFSIGNALED(status)) return "process terminated by signal " + std::to_string(WTERMSIG(status));
    if (WIFEXITED(status))
        return "process exited with status " + std::to_string(WEXITSTATUS(status)) +
               " without reporting a result";
    return "process ended abnormally";
}

struct Invocation {
    json report;
    Outcome fallback;  // used when report is null
};

Invocation invoke(const fs::path& runtime, json request, const ExecutionLimits& limits) {
    static const bool sigpipe_ignored = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;

    const std::string nonce = make_nonce();
    request["nonce"] = nonce;
    request["max_stdout"] = limits.max_stdout;

    WorkDir dir;
    ChildResult child;
    {
        SlotGuard slot(ChildSlots::global());
        child = spawn_and_collect(runtime, dir.path(), request.dump(), limits);
    }

    Invocation inv;
    if (child.exec_failed) {
        inv.fallback.result = Outcome::HarnessFailure{"cannot start runtime " + runtime.string() +
                                                      ": " + std::strerror(child.exec_errno)};
        return inv;
    }
    if (auto report = find_report(child.out, nonce)) {
        inv.report = std::move(*report);
        return inv;
    }
    if (child.timed_out) {
        inv.fallback.result = Outcome::TimedOut{};
    } else if (WIFSIGNALED(child.wait_status) &&
               (WTERMSIG(child.wait_status) == SIGXCPU || WTERMSIG(child.wait_status) == SIGKILL)) {
        inv.fallback.result = Outcome::TimedOut{};
    } else if (child.err.find("MemoryError") != std::string::npos) {
        inv.fallback.result = Outcome::MemoryExceeded{};
    } else if (child.err.find("harness.py") != std::string::npos &&
               child.err.find("<candidate>") == std::string::npos) {
        // The shim itself crashed before running candidate code.
        inv.fallback.result = Outcome::HarnessFailure{describe_exit(child.wait_status) + ": " +
                                                      child.err.substr(0, 2000)};
    } else {
        inv.fallback.result = Outcome::Raised{describe_exit(child.wait_status)};
    }
    return inv;
}

}  // namespace

Sandbox::Sandbox(SandboxConfig config) : runtime_(resolve_runtime(config.runtime)) {}

Outcome Sandbox::run_one(const std::string& source, const std::string& function_name,
                         const ArgumentTuple& args, const ExecutionLimits& limits) const {
    json request = {{"mode", "call"},
                    {"source", source},
                    {"function", function_name},
                    {"args", args.to_json()},
                    {"arity", args.arity()}};
    auto inv = invoke(runtime_, std::move(request), limits);
    if (inv.report.is_null()) return inv.fallback;
    const auto& r = inv.report;
    try {
        return outcome_from_json(r);
    } catch (const std::invalid_argument& e) {
        Outcome o;
        o.result = Outcome::Raised{std::string("unencodable return type: ") + e.what()};
        o.stdout_text = r.value("stdout", std::string());
        return o;
    }
}

std::vector<Outcome> Sandbox::run_candidate(const std::string& source,
                                            const std::string& function_name,
                                            const std::vector<ArgumentTuple>& vectors,
                                            const ExecutionLimits& limits) const {
    std::vector<Outcome> outcomes;
    outcomes.reserve(vectors.size());
    for (const auto& v : vectors) outcomes.push_back(run_one(source, function_name, v, limits));
    return outcomes;
}

ProbeResult Sandbox::probe_signature(const std::string& source, const std::string& function_name,
                                     std::size_t arity, const ExecutionLimits& limits) const {
    json request = {{"mode", "probe"},
                    {"source", source},
                    {"function", function_name},
                    {"args", json::array()},
                    {"arity", arity}};
    auto inv = invoke(runtime_, std::move(request), limits);
    if (inv.report.is_null()) {
        if (auto* hf = std::get_if<Outcome::HarnessFailure>(&inv.fallback.result))
            throw HarnessError(hf->reason);
        return {SignatureStatus::LoadFailed, inv.fallback.describe()};
    }
    const auto status = inv.report.value("status", std::string());
    if (status == "signature") {
        if (inv.report.value("ok", false)) return {SignatureStatus::Ok, {}};
        return {SignatureStatus::Mismatch, inv.report.value("error", std::string())};
    }
    if (status == "memory") return {SignatureStatus::LoadFailed, "memory limit exceeded"};
    return {SignatureStatus::LoadFailed, inv.report.value("error", std::string())};
}

}  // namespace eipl
