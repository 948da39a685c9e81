#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace redloop {

/// Hierarchical task identifier, rendered dot-separated ("1.3.1.4").
/// The root is always "1"; a child's path extends its parent's by exactly
/// one ordinal, and sibling ordinals are contiguous starting at 1.
struct TaskId {
    std::vector<int> path;

    static TaskId parse(const std::string& text);
    static TaskId root() { return TaskId{{1}}; }

    std::string str() const;
    bool is_root() const { return path.size() == 1; }
    TaskId parent() const;
    TaskId child(int ordinal) const;
    int ordinal() const { return path.back(); }
    std::size_t depth() const { return path.size(); }

    auto operator<=>(const TaskId&) const = default;
};

enum class TaskStatus { Pending, InProgress, Completed, Failed };
enum class ExitClass { Success, Timeout, CommandNotFound, FileNotFound, Others };
enum class RunStatus { Running, Success, Failure, Aborted };

std::string to_string(TaskStatus s);
std::string to_string(ExitClass c);
std::string to_string(RunStatus s);
TaskStatus task_status_from_string(const std::string& s);
ExitClass exit_class_from_string(const std::string& s);
RunStatus run_status_from_string(const std::string& s);

/// One command execution record. exit_code == -1 is reserved for
/// timeout-kills; real shells never produce it.
struct ActResult {
    std::string command;
    int timeout_sec = 30;
    int exit_code = 0;
    ExitClass exit_class = ExitClass::Others;
    std::string log_summary;
};

struct EnvMetadata {
    std::string started_at;                 // RFC-3339 UTC "Z"
    std::optional<std::string> finished_at; // absent while running
    RunStatus status = RunStatus::Running;
    std::string lhost;                      // attacker IPv4
    std::string rhost;                      // target IPv4
    std::string target_description;
};

struct TaskNode {
    TaskId id;
    std::string title;
    std::string detail;
    TaskStatus status = TaskStatus::Pending;
    std::vector<ActResult> act_results;
    std::vector<TaskNode> subtasks;

    /// Monotone wall-order stamp of the most recent act result. Lives in the
    /// event log domain, never in the PTT JSON.
    std::uint64_t exec_seq = 0;

    bool is_leaf() const { return subtasks.empty(); }
};

/// A planner-emitted task before it is merged into the tree.
struct NewTaskProposal {
    std::string title;
    std::string detail;
    std::string origin_reason;
};

/// The Pentesting Task Tree: the single source of planning state.
/// Single-writer; readers may copy snapshots freely.
struct Ptt {
    std::string version = "2";
    EnvMetadata metadata;
    TaskNode root;

    std::uint64_t exec_counter = 0;  // transient, feeds TaskNode::exec_seq

    TaskNode* find(const TaskId& id);
    const TaskNode* find(const TaskId& id) const;
};

/// Signals how the caller wants a recorded result to settle the task.
enum class RecordDisposition { Continue, Conclude, Exhausted };

bool is_ipv4(const std::string& s);

/// Parses and fully validates a PTT JSON document.
/// Throws SchemaError (missing/mistyped field) or InvariantError
/// (bad id structure, illegal status placement, bad timestamps).
Ptt parse_ptt(const std::string& text);

/// Canonical serialization: fixed schema key order, two-space indent,
/// optional fields omitted when absent. parse_ptt(serialize_ptt(p))
/// structurally equals p, and the form is byte-stable under round-trips.
std::string serialize_ptt(const Ptt& ptt);

/// Appends each proposal as a pending leaf child of `parent`, next sibling
/// ordinals, order preserved. Returns the ids of the nodes added.
/// Throws UnknownParent.
std::vector<TaskId> merge_new_tasks(Ptt& ptt, const TaskId& parent,
                                    const std::vector<NewTaskProposal>& proposals);

/// pending -> in_progress claim. Throws NotALeaf / InvariantError.
void mark_in_progress(Ptt& ptt, const TaskId& id);

/// Appends a result to an in_progress leaf and settles its status per the
/// caller-signaled disposition. Throws NotALeaf / NotInProgress.
void record_act_result(Ptt& ptt, const TaskId& id, const ActResult& result,
                       RecordDisposition disposition);

/// All pending leaves in depth-first document order.
std::vector<const TaskNode*> runnable_leaves(const Ptt& ptt);

/// The node whose most recent ActResult was appended last in wall order,
/// or nullptr when nothing has executed.
const TaskNode* last_executed_task(const Ptt& ptt);

/// Total node count (root included).
std::size_t node_count(const Ptt& ptt);

}  // namespace redloop
