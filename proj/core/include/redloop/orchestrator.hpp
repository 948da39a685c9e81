#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "redloop/act.hpp"
#include "redloop/clock.hpp"
#include "redloop/events.hpp"
#include "redloop/llm.hpp"
#include "redloop/ptt.hpp"

namespace redloop {

enum class ExecutorBackend { Real, Sim };
enum class ModelBackend { Remote, Scripted };

struct RunConfig {
    std::string rhost;
    std::string lhost = "10.10.14.22";
    std::string target_description = "target under test";

    bool success_cases_enabled = true;
    bool lenient_prioritizer = false;
    int max_steps = 30;
    int max_wall_sec = 1200;

    ExecutorBackend executor = ExecutorBackend::Sim;
    ModelBackend model = ModelBackend::Scripted;
    bool allow_real_exec = false;
    std::string target_cidr;              // required for the real executor
    bool allow_remote_with_sim = false;

    PriceTable prices;
    RemoteConfig remote;
    ActConfig act;

    std::filesystem::path scenario_path;     // sim executor
    std::filesystem::path transcripts_path;  // scripted model
    std::filesystem::path corpora_dir;       // holds techniques/ and success_cases/
    std::filesystem::path index_file;        // pre-built index (alternative to corpora_dir)
    std::filesystem::path prompts_dir;       // empty = built-in templates
    std::filesystem::path out_dir = "runs";
    std::filesystem::path working_dir;       // real executor cwd

    Clock* clock = nullptr;  // test injection; defaults per executor backend
};

struct RunReport {
    RunStatus outcome = RunStatus::Failure;
    std::optional<std::string> shell_command;
    int steps = 0;
    double elapsed_sec = 0.0;
    Ptt final_ptt;
    ModuleLedger ledger;
    std::map<std::string, double> time_breakdown_sec;
    std::string failure_narrative;  // empty on SUCCESS
    std::filesystem::path run_dir;
    std::filesystem::path event_log_path;
};

/// Validates the configuration (ConfigError) and drives the full loop:
/// expand -> prioritize -> run task, until a shell is obtained (SUCCESS),
/// fail-fast or a planner hallucination aborts (ABORTED), the plan or step
/// budget is exhausted (FAILURE), or the wall budget expires (ABORTED).
/// All in-loop failures become outcomes; run() only throws before the loop.
RunReport run(const RunConfig& config);

/// Attributes every interval of a finished run's event log to exactly one
/// module bucket. The buckets sum to the run's elapsed time.
std::map<std::string, double> time_breakdown(const std::vector<Event>& events);

/// "a.b.c.d/n" containment test for real-executor target gating.
bool cidr_contains(const std::string& cidr, const std::string& ip);

/// Module bucket names in report order.
const std::vector<std::string>& module_buckets();

}  // namespace redloop
