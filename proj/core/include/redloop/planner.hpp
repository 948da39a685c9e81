#pragma once

#include <optional>
#include <string>
#include <vector>

#include "redloop/clock.hpp"
#include "redloop/events.hpp"
#include "redloop/llm.hpp"
#include "redloop/ptt.hpp"
#include "redloop/rag.hpp"

namespace redloop {

struct PlanStep {
    int step_index = 0;
    std::vector<TaskId> added_task_ids;
    int dedup_dropped = 0;
    std::vector<std::string> lint_rejected;  // titles dropped by the RHOST lint
    std::int64_t l2_ms = 0;                  // time spent in success-case analysis
};

struct AnalyzeResult {
    std::vector<NewTaskProposal> proposals;
    std::vector<std::string> lint_rejected;
};

struct PlannerConfig {
    bool success_cases_enabled = true;
    bool lenient_prioritizer = false;
    int success_case_hits = 1;  // the flow analyzes a single retrieved case
};

/// The reasoning side of the loop: tree expansion with LLM dedup, success
/// -case driven task generation, and validated next-task selection.
class RePlanner {
public:
    RePlanner(LlmGateway& gateway, const RagStore* rag, Clock& clock,
              EventLog* events = nullptr, PlannerConfig config = {});

    /// Single-line retrieval query from the most recent task execution.
    std::string gen_success_query(const TaskNode& last_task);

    /// Turns a retrieved success case into proposals for the current
    /// environment. Proposals still naming the success case's RHOST are
    /// dropped by the lint, never merged.
    AnalyzeResult analyze_success_case(const TaskNode& last_task,
                                       const std::optional<Ptt>& retrieved,
                                       const EnvMetadata& env);

    /// One planning step: success-case proposals (when enabled) plus base
    /// planner proposals, deduplicated, merged under the parent the planner
    /// names (default: parent of the last executed task, else root).
    PlanStep expand(Ptt& ptt, const TaskNode* last_task);

    /// Order-preserving subsequence of `candidates`. Exact duplicates
    /// (normalized title+detail) are dropped without a model call; the
    /// TaskDedup role then judges the rest. Gateway failures fail open to
    /// the deterministic pre-filter alone.
    std::vector<NewTaskProposal> dedup(const std::vector<NewTaskProposal>& candidates,
                                       const Ptt& ptt);

    /// Validated next-task selection. A model choice that is not a runnable
    /// leaf raises NonLeafSelected (fatal), or falls back to the DFS-first
    /// runnable leaf under the lenient policy. A missing transcript entry in
    /// scripted mode also falls back to DFS-first.
    TaskId prioritize(const Ptt& ptt);

    int steps_taken() const { return steps_; }

private:
    LlmGateway& gateway_;
    const RagStore* rag_;
    Clock& clock_;
    EventLog* events_;
    PlannerConfig config_;
    int steps_ = 0;
};

/// Lowercase, collapse whitespace, strip punctuation.
std::string normalize_for_dedup(const std::string& text);

/// True when `text` contains `ip` as a whole dotted-quad token.
bool contains_ip_token(const std::string& text, const std::string& ip);

nlohmann::json task_node_to_json(const TaskNode& node);

}  // namespace redloop
