#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "redloop/ptt.hpp"

namespace testsupport {

inline std::filesystem::path assets_dir() {
    return std::filesystem::path(REDLOOP_ASSETS_DIR);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("redloop-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Randomized but always-valid PTT for parse/serialize identity properties.
class PttGenerator {
public:
    explicit PttGenerator(std::uint64_t seed) : rng_(seed) {}

    redloop::Ptt next() {
        redloop::Ptt ptt;
        ptt.metadata.started_at = "2025-02-13T22:01:52Z";
        if (chance(2)) ptt.metadata.finished_at = "2025-02-13T23:59:59Z";
        ptt.metadata.status = pick<redloop::RunStatus>(
            {redloop::RunStatus::Running, redloop::RunStatus::Success,
             redloop::RunStatus::Failure, redloop::RunStatus::Aborted});
        ptt.metadata.lhost = "10.10.14." + std::to_string(range(1, 250));
        ptt.metadata.rhost = "10.129." + std::to_string(range(0, 250)) + "." +
                             std::to_string(range(1, 250));
        ptt.metadata.target_description = words(range(2, 6));
        ptt.root = node(redloop::TaskId::root(), 0);
        return ptt;
    }

private:
    redloop::TaskNode node(const redloop::TaskId& id, int depth) {
        redloop::TaskNode n;
        n.id = id;
        n.title = words(range(2, 5));
        n.detail = chance(4) ? std::string{} : words(range(4, 12));
        const int n_children = depth >= 3 ? 0 : range(0, 3 - depth);
        for (int i = 1; i <= n_children; ++i) n.subtasks.push_back(node(id.child(i), depth + 1));
        n.status = n.subtasks.empty()
                       ? pick<redloop::TaskStatus>(
                             {redloop::TaskStatus::Pending, redloop::TaskStatus::InProgress,
                              redloop::TaskStatus::Completed, redloop::TaskStatus::Failed})
                       : pick<redloop::TaskStatus>(
                             {redloop::TaskStatus::Pending, redloop::TaskStatus::Completed,
                              redloop::TaskStatus::Failed});
        const int n_results = range(0, 3);
        for (int i = 0; i < n_results; ++i) {
            redloop::ActResult r;
            r.command = words(range(1, 4));
            r.timeout_sec = pick<int>({30, 60, 120});
            if (chance(4)) {
                r.exit_class = redloop::ExitClass::Timeout;
                r.exit_code = -1;
                r.log_summary = chance(2) ? std::string{} : words(3);
            } else {
                r.exit_class = pick<redloop::ExitClass>(
                    {redloop::ExitClass::Success, redloop::ExitClass::CommandNotFound,
                     redloop::ExitClass::FileNotFound, redloop::ExitClass::Others});
                r.exit_code = range(0, 130);
                r.log_summary = words(range(1, 8));
            }
            n.act_results.push_back(std::move(r));
        }
        return n;
    }

    bool chance(int one_in) { return range(1, one_in) == 1; }
    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    template <typename T>
    T pick(std::initializer_list<T> options) {
        const int i = range(0, static_cast<int>(options.size()) - 1);
        return *(options.begin() + i);
    }

    std::string words(int n) {
        static const char* pool[] = {"scan",   "port",  "service", "smb",    "exploit",
                                     "verify", "share", "session", "target", "probe",
                                     "banner", "check", "windows", "listener"};
        std::string out;
        for (int i = 0; i < n; ++i) {
            if (i) out += ' ';
            out += pool[range(0, static_cast<int>(std::size(pool)) - 1)];
        }
        return out;
    }

    std::mt19937_64 rng_;
};

}  // namespace testsupport
