#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "redloop/events.hpp"
#include "redloop/executor.hpp"
#include "redloop/llm.hpp"
#include "redloop/ptt.hpp"
#include "redloop/rag.hpp"

namespace redloop {

struct Classification {
    ExitClass exit_class = ExitClass::Others;
    std::string log_summary;
    bool shell_detected = false;
};

enum class AbortSignal { None, FailFast };

struct TaskRunResult {
    TaskStatus status = TaskStatus::Failed;
    std::vector<ActResult> results;
    AbortSignal abort = AbortSignal::None;
    bool shell_detected = false;
    std::string shell_command;
};

struct ActConfig {
    int max_attempts = 3;
    int initial_timeout_sec = 30;
    int technique_hits = 4;
    /// Regexes matched against captured logs; a match means a shell was
    /// obtained and the run succeeded.
    std::vector<std::string> shell_markers = default_shell_markers();

    static std::vector<std::string> default_shell_markers();
};

/// The act side of the loop: command generation with technique retrieval,
/// timed execution, log classification, and the retry/timeout/fail-fast
/// feedback policies.
class ActEngine {
public:
    ActEngine(LlmGateway& gateway, const RagStore* rag, CommandExecutor& executor,
              EventLog* events = nullptr, ActConfig config = {});

    /// Caps every command's timeout to the remaining wall budget when set.
    void set_budget(std::function<std::int64_t()> remaining_ms) {
        remaining_budget_ms_ = std::move(remaining_ms);
    }

    /// One CommandGen call. After a timeout the prompt demands a faster
    /// alternative; when the model reports none, the previous command is
    /// reused with its timeout doubled (30 -> 60 -> 120).
    CommandSpec generate_command(const TaskNode& task, const EnvMetadata& env,
                                 const std::vector<ActResult>& history,
                                 const std::vector<RagHit>& hits,
                                 const std::optional<CommandSpec>& previous,
                                 bool previous_timed_out);

    /// Deterministic pre-classifier first (timeouts and missing
    /// command/file), the model only for the SUCCESS/OTHERS judgment.
    Classification classify(const RawOutcome& outcome, const std::string& command);

    /// The generate -> execute -> classify cycle, at most three attempts.
    /// COMMAND_NOT_FOUND / FILE_NOT_FOUND fail the task immediately and
    /// signal FailFast to the caller.
    TaskRunResult run_task(Ptt& ptt, const TaskId& id, const EnvMetadata& env);

    const ActConfig& config() const { return config_; }

private:
    LlmGateway& gateway_;
    const RagStore* rag_;
    CommandExecutor& executor_;
    EventLog* events_;
    ActConfig config_;
    std::function<std::int64_t()> remaining_budget_ms_;
};

}  // namespace redloop
