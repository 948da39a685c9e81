#include "redloop/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>

#include "redloop/errors.hpp"

namespace redloop {

void append_capped(std::string& buffer, const char* data, std::size_t len, std::size_t cap) {
    buffer.append(data, len);
    if (buffer.size() > cap) buffer.erase(0, buffer.size() - cap);
}

RawOutcome ShellExecutor::execute(const CommandSpec& spec, std::int64_t effective_timeout_ms) {
    int out_pipe[2];
    int err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
        throw SpawnError(std::string("pipe() failed: ") + std::strerror(errno));
    }

    const pid_t pid = fork();
    if (pid < 0) {
        throw SpawnError(std::string("fork() failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // child: own process group so the whole tree can be killed at once
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (!options_.working_dir.empty()) {
            if (chdir(options_.working_dir.c_str()) != 0) _exit(126);
        }
        std::vector<std::string> env_strings;
        for (const std::string& name : options_.env_allowlist) {
            if (const char* value = getenv(name.c_str())) {
                env_strings.push_back(name + "=" + value);
            }
        }
        std::vector<char*> envp;
        for (std::string& s : env_strings) envp.push_back(s.data());
        envp.push_back(nullptr);
        execle("/bin/sh", "sh", "-c", spec.command.c_str(), static_cast<char*>(nullptr),
               envp.data());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    RawOutcome outcome;
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::milliseconds(effective_timeout_ms);
    bool out_open = true;
    bool err_open = true;
    char buf[4096];

    auto drain = [&](int fd, std::string& sink, bool& open) {
        for (;;) {
            const ssize_t n = read(fd, buf, sizeof(buf));
            if (n > 0) {
                append_capped(sink, buf, static_cast<std::size_t>(n),
                              options_.capture_cap_bytes);
            } else if (n == 0) {
                open = false;
                return;
            } else {
                return;  // EAGAIN or transient error
            }
        }
    };

    bool killed = false;
    bool reaped = false;
    int status = 0;
    while (!reaped || out_open || err_open) {
        const auto now = std::chrono::steady_clock::now();
        if (!killed && now >= deadline) {
            kill(-pid, SIGKILL);
            killed = true;
        }
        if (!reaped) {
            const pid_t r = waitpid(pid, &status, WNOHANG);
            if (r == pid) reaped = true;
        }
        if (killed && reaped) {
            // group is dead; one last drain below picks up buffered output
            drain(out_pipe[0], outcome.stdout_text, out_open);
            drain(err_pipe[0], outcome.stderr_text, err_open);
            break;
        }
        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
        int wait_ms = 20;
        if (!killed) {
            const auto remain =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            wait_ms = static_cast<int>(std::min<std::int64_t>(std::max<std::int64_t>(remain, 1),
                                                              20));
        }
        if (nfds > 0) {
            poll(fds, nfds, wait_ms);
        } else {
            struct timespec ts = {0, wait_ms * 1000000L};
            nanosleep(&ts, nullptr);
        }
        if (out_open) drain(out_pipe[0], outcome.stdout_text, out_open);
        if (err_open) drain(err_pipe[0], outcome.stderr_text, err_open);
    }
    close(out_pipe[0]);
    close(err_pipe[0]);
    if (!reaped) {
        while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
        }
    }
    // reap any stragglers in the group
    if (killed) kill(-pid, SIGKILL);

    outcome.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    outcome.timed_out = killed;
    if (killed) {
        outcome.exit_code = -1;  // reserved for timeout kills
    } else if (WIFEXITED(status)) {
        outcome.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        outcome.exit_code = 128 + WTERMSIG(status);
    }
    return outcome;
}

}  // namespace redloop
