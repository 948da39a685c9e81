#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "redloop/clock.hpp"

namespace redloop {

/// A generated command ready to execute.
struct CommandSpec {
    std::string command;
    int timeout_sec = 30;
    int attempt = 1;  // 1..3
    std::string rationale;
};

struct RawOutcome {
    int exit_code = 0;
    std::string stdout_text;
    std::string stderr_text;
    std::int64_t duration_ms = 0;
    bool timed_out = false;
};

class CommandExecutor {
public:
    virtual ~CommandExecutor() = default;

    /// Runs the command, enforcing `effective_timeout_ms` (the caller may
    /// shrink the spec's own timeout to fit the remaining wall budget).
    /// A timeout kills the whole process tree and yields exit_code -1.
    virtual RawOutcome execute(const CommandSpec& spec, std::int64_t effective_timeout_ms) = 0;

    RawOutcome execute(const CommandSpec& spec) {
        return execute(spec, static_cast<std::int64_t>(spec.timeout_sec) * 1000);
    }
};

/// Real shell execution: /bin/sh -c in its own process group, stdout/stderr
/// captured tail-preserving up to 64 KiB each, SIGKILL to the group at
/// timeout.
class ShellExecutor final : public CommandExecutor {
public:
    struct Options {
        std::filesystem::path working_dir;          // empty = inherit cwd
        std::vector<std::string> env_allowlist = {  // names passed through
            "PATH", "HOME", "LANG", "TERM", "USER"};
        std::size_t capture_cap_bytes = 64 * 1024;
    };

    ShellExecutor() = default;
    explicit ShellExecutor(Options options) : options_(std::move(options)) {}

    using CommandExecutor::execute;
    RawOutcome execute(const CommandSpec& spec, std::int64_t effective_timeout_ms) override;

private:
    Options options_;
};

/// Keeps the last `cap` bytes of a stream (exploit banners appear late).
void append_capped(std::string& buffer, const char* data, std::size_t len, std::size_t cap);

}  // namespace redloop
