#include "redloop/ptt.hpp"

#include <json.hpp>

#include "redloop/clock.hpp"
#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxActResults = 3;

}  // namespace

TaskId TaskId::parse(const std::string& text) {
    TaskId id;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t dot = text.find('.', pos);
        const std::string part = text.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
            throw InvariantError("bad task id: \"" + text + "\"");
        }
        const long v = std::stol(part);
        if (v <= 0) throw InvariantError("task id ordinal must be positive: \"" + text + "\"");
        id.path.push_back(static_cast<int>(v));
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (id.path.empty()) throw InvariantError("empty task id");
    return id;
}

std::string TaskId::str() const {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(path[i]);
    }
    return out;
}

TaskId TaskId::parent() const {
    if (is_root()) throw InvariantError("root task id has no parent");
    TaskId p{path};
    p.path.pop_back();
    return p;
}

TaskId TaskId::child(int ordinal) const {
    TaskId c{path};
    c.path.push_back(ordinal);
    return c;
}

std::string to_string(TaskStatus s) {
    switch (s) {
        case TaskStatus::Pending: return "pending";
        case TaskStatus::InProgress: return "in_progress";
        case TaskStatus::Completed: return "completed";
        case TaskStatus::Failed: return "failed";
    }
    return "pending";
}

std::string to_string(ExitClass c) {
    switch (c) {
        case ExitClass::Success: return "SUCCESS";
        case ExitClass::Timeout: return "TIMEOUT";
        case ExitClass::CommandNotFound: return "COMMAND_NOT_FOUND";
        case ExitClass::FileNotFound: return "FILE_NOT_FOUND";
        case ExitClass::Others: return "OTHERS";
    }
    return "OTHERS";
}

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Running: return "RUNNING";
        case RunStatus::Success: return "SUCCESS";
        case RunStatus::Failure: return "FAILURE";
        case RunStatus::Aborted: return "ABORTED";
    }
    return "RUNNING";
}

TaskStatus task_status_from_string(const std::string& s) {
    if (s == "pending") return TaskStatus::Pending;
    if (s == "in_progress") return TaskStatus::InProgress;
    if (s == "completed") return TaskStatus::Completed;
    if (s == "failed") return TaskStatus::Failed;
    throw InvariantError("unknown task status: \"" + s + "\"");
}

ExitClass exit_class_from_string(const std::string& s) {
    if (s == "SUCCESS") return ExitClass::Success;
    if (s == "TIMEOUT") return ExitClass::Timeout;
    if (s == "COMMAND_NOT_FOUND") return ExitClass::CommandNotFound;
    if (s == "FILE_NOT_FOUND") return ExitClass::FileNotFound;
    if (s == "OTHERS") return ExitClass::Others;
    throw InvariantError("unknown exit class: \"" + s + "\"");
}

RunStatus run_status_from_string(const std::string& s) {
    if (s == "RUNNING") return RunStatus::Running;
    if (s == "SUCCESS") return RunStatus::Success;
    if (s == "FAILURE") return RunStatus::Failure;
    if (s == "ABORTED") return RunStatus::Aborted;
    throw InvariantError("unknown run status: \"" + s + "\"");
}

bool is_ipv4(const std::string& s) {
    int dots = 0;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t dot = s.find('.', pos);
        const std::string part = s.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty() || part.size() > 3 ||
            part.find_first_not_of("0123456789") != std::string::npos) {
            return false;
        }
        if (std::stoi(part) > 255) return false;
        if (dot == std::string::npos) break;
        ++dots;
        pos = dot + 1;
    }
    return dots == 3;
}

TaskNode* Ptt::find(const TaskId& id) {
    return const_cast<TaskNode*>(static_cast<const Ptt*>(this)->find(id));
}

const TaskNode* Ptt::find(const TaskId& id) const {
    if (id.path.empty() || id.path.front() != 1) return nullptr;
    const TaskNode* node = &root;
    for (std::size_t i = 1; i < id.path.size(); ++i) {
        const int ord = id.path[i];
        if (ord < 1 || static_cast<std::size_t>(ord) > node->subtasks.size()) return nullptr;
        node = &node->subtasks[ord - 1];
    }
    return node;
}

// ---------------------------------------------------------------- parsing

namespace {

const json* get_field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    return &*it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json* v = get_field(obj, key, path);
    const std::string here = path + "." + key;
    if (!v) throw SchemaError(here, "missing required field");
    if (!v->is_string()) throw SchemaError(here, "expected a string");
    return v->get<std::string>();
}

int require_int(const json& obj, const char* key, const std::string& path) {
    const json* v = get_field(obj, key, path);
    const std::string here = path + "." + key;
    if (!v) throw SchemaError(here, "missing required field");
    if (!v->is_number_integer()) throw SchemaError(here, "expected an integer");
    return v->get<int>();
}

ActResult parse_act_result(const json& j, const std::string& path) {
    ActResult r;
    r.command = require_string(j, "command", path);
    r.timeout_sec = require_int(j, "timeout_sec", path);
    if (r.timeout_sec <= 0) throw InvariantError(path + ".timeout_sec must be positive");
    r.exit_code = require_int(j, "exit_code", path);
    r.exit_class = exit_class_from_string(require_string(j, "exit_class", path));
    r.log_summary = require_string(j, "log_summary", path);
    if ((r.exit_class == ExitClass::Timeout) != (r.exit_code == -1)) {
        throw InvariantError(path + ": exit_class TIMEOUT must pair with exit_code -1");
    }
    if (r.exit_class != ExitClass::Timeout && r.log_summary.empty()) {
        throw InvariantError(path + ".log_summary must be non-empty unless TIMEOUT");
    }
    return r;
}

TaskNode parse_node(const json& j, const TaskId& expected_id, const std::string& path) {
    TaskNode node;
    const std::string id_text = require_string(j, "id", path);
    node.id = TaskId::parse(id_text);
    if (node.id != expected_id) {
        throw InvariantError(path + ".id: expected \"" + expected_id.str() + "\", got \"" +
                             id_text + "\" (ids must be contiguous and extend the parent)");
    }
    node.title = require_string(j, "title", path);
    if (const json* d = get_field(j, "detail", path)) {
        if (!d->is_string()) throw SchemaError(path + ".detail", "expected a string");
        node.detail = d->get<std::string>();
    }
    if (const json* s = get_field(j, "status", path)) {
        if (!s->is_string()) throw SchemaError(path + ".status", "expected a string");
        node.status = task_status_from_string(s->get<std::string>());
    }
    if (const json* a = get_field(j, "act_results", path)) {
        if (!a->is_array()) throw SchemaError(path + ".act_results", "expected an array");
        std::size_t i = 0;
        for (const auto& item : *a) {
            node.act_results.push_back(
                parse_act_result(item, path + ".act_results[" + std::to_string(i++) + "]"));
        }
        if (node.act_results.size() > kMaxActResults) {
            throw InvariantError(path + ".act_results exceeds the attempt limit of " +
                                 std::to_string(kMaxActResults));
        }
    }
    if (const json* sub = get_field(j, "subtasks", path)) {
        if (!sub->is_array()) throw SchemaError(path + ".subtasks", "expected an array");
        int ordinal = 1;
        for (const auto& child : *sub) {
            node.subtasks.push_back(parse_node(child, expected_id.child(ordinal),
                                               path + ".subtasks[" +
                                                   std::to_string(ordinal - 1) + "]"));
            ++ordinal;
        }
    }
    if (node.status == TaskStatus::InProgress && !node.is_leaf()) {
        throw InvariantError(path + ": only leaf nodes may be in_progress");
    }
    return node;
}

EnvMetadata parse_metadata(const json& j) {
    const std::string path = "$.metadata";
    EnvMetadata m;
    m.started_at = require_string(j, "started_at", path);
    parse_rfc3339(m.started_at);
    if (const json* f = get_field(j, "finished_at", path)) {
        if (!f->is_string()) throw SchemaError(path + ".finished_at", "expected a string");
        m.finished_at = f->get<std::string>();
        if (parse_rfc3339(*m.finished_at) < parse_rfc3339(m.started_at)) {
            throw InvariantError("metadata.finished_at precedes started_at");
        }
    }
    m.status = run_status_from_string(require_string(j, "status", path));

    const json* attacker = get_field(j, "attacker", path);
    if (!attacker) throw SchemaError(path + ".attacker", "missing required field");
    m.lhost = require_string(*attacker, "LHOST", path + ".attacker");

    const json* target = get_field(j, "target", path);
    if (!target) throw SchemaError(path + ".target", "missing required field");
    m.target_description = require_string(*target, "description", path + ".target");
    m.rhost = require_string(*target, "RHOST", path + ".target");

    if (!is_ipv4(m.lhost)) throw InvariantError("attacker.LHOST is not an IPv4 address");
    if (!is_ipv4(m.rhost)) throw InvariantError("target.RHOST is not an IPv4 address");
    if (m.lhost == m.rhost) throw InvariantError("LHOST must differ from RHOST");
    return m;
}

}  // namespace

Ptt parse_ptt(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("not valid JSON: ") + e.what());
    }
    Ptt ptt;
    ptt.version = require_string(doc, "version", "$");
    if (ptt.version != "2") {
        throw InvariantError("unsupported PTT version \"" + ptt.version + "\" (expected \"2\")");
    }
    const json* meta = get_field(doc, "metadata", "$");
    if (!meta) throw SchemaError("$.metadata", "missing required field");
    ptt.metadata = parse_metadata(*meta);
    const json* root = get_field(doc, "root", "$");
    if (!root) throw SchemaError("$.root", "missing required field");
    ptt.root = parse_node(*root, TaskId::root(), "$.root");
    return ptt;
}

// ------------------------------------------------------------ serializing

namespace {

ordered_json node_to_json(const TaskNode& node) {
    ordered_json j;
    j["id"] = node.id.str();
    j["title"] = node.title;
    j["detail"] = node.detail;
    j["status"] = to_string(node.status);
    ordered_json results = ordered_json::array();
    for (const ActResult& r : node.act_results) {
        ordered_json rj;
        rj["command"] = r.command;
        rj["timeout_sec"] = r.timeout_sec;
        rj["exit_code"] = r.exit_code;
        rj["exit_class"] = to_string(r.exit_class);
        rj["log_summary"] = r.log_summary;
        results.push_back(std::move(rj));
    }
    j["act_results"] = std::move(results);
    ordered_json subs = ordered_json::array();
    for (const TaskNode& child : node.subtasks) subs.push_back(node_to_json(child));
    j["subtasks"] = std::move(subs);
    return j;
}

}  // namespace

std::string serialize_ptt(const Ptt& ptt) {
    ordered_json doc;
    doc["version"] = ptt.version;
    ordered_json meta;
    meta["started_at"] = ptt.metadata.started_at;
    if (ptt.metadata.finished_at) meta["finished_at"] = *ptt.metadata.finished_at;
    meta["status"] = to_string(ptt.metadata.status);
    meta["attacker"] = ordered_json{{"LHOST", ptt.metadata.lhost}};
    ordered_json target;
    target["description"] = ptt.metadata.target_description;
    target["RHOST"] = ptt.metadata.rhost;
    meta["target"] = std::move(target);
    doc["metadata"] = std::move(meta);
    doc["root"] = node_to_json(ptt.root);
    return doc.dump(2) + "\n";
}

// -------------------------------------------------------------- mutation

std::vector<TaskId> merge_new_tasks(Ptt& ptt, const TaskId& parent,
                                    const std::vector<NewTaskProposal>& proposals) {
    TaskNode* node = ptt.find(parent);
    if (!node) throw UnknownParent("no such task: \"" + parent.str() + "\"");
    std::vector<TaskId> added;
    for (const NewTaskProposal& p : proposals) {
        TaskNode child;
        child.id = parent.child(static_cast<int>(node->subtasks.size()) + 1);
        child.title = p.title;
        child.detail = p.detail;
        child.status = TaskStatus::Pending;
        added.push_back(child.id);
        node->subtasks.push_back(std::move(child));
    }
    return added;
}

void mark_in_progress(Ptt& ptt, const TaskId& id) {
    TaskNode* node = ptt.find(id);
    if (!node) throw UnknownParent("no such task: \"" + id.str() + "\"");
    if (!node->is_leaf()) throw NotALeaf("task \"" + id.str() + "\" is not a leaf");
    if (node->status != TaskStatus::Pending) {
        throw InvariantError("task \"" + id.str() + "\" is not pending");
    }
    node->status = TaskStatus::InProgress;
}

void record_act_result(Ptt& ptt, const TaskId& id, const ActResult& result,
                       RecordDisposition disposition) {
    TaskNode* node = ptt.find(id);
    if (!node) throw UnknownParent("no such task: \"" + id.str() + "\"");
    if (!node->is_leaf()) throw NotALeaf("task \"" + id.str() + "\" is not a leaf");
    if (node->status != TaskStatus::InProgress) {
        throw NotInProgress("task \"" + id.str() + "\" is not in_progress");
    }
    if (node->act_results.size() >= kMaxActResults) {
        throw InvariantError("task \"" + id.str() + "\" already holds the maximum of " +
                             std::to_string(kMaxActResults) + " act results");
    }
    node->act_results.push_back(result);
    node->exec_seq = ++ptt.exec_counter;
    switch (disposition) {
        case RecordDisposition::Continue: break;
        case RecordDisposition::Conclude: node->status = TaskStatus::Completed; break;
        case RecordDisposition::Exhausted: node->status = TaskStatus::Failed; break;
    }
}

namespace {

void collect_pending_leaves(const TaskNode& node, std::vector<const TaskNode*>& out) {
    if (node.is_leaf()) {
        if (node.status == TaskStatus::Pending) out.push_back(&node);
        return;
    }
    for (const TaskNode& child : node.subtasks) collect_pending_leaves(child, out);
}

void find_last_executed(const TaskNode& node, const TaskNode*& best) {
    if (node.exec_seq > 0 && (!best || node.exec_seq > best->exec_seq)) best = &node;
    for (const TaskNode& child : node.subtasks) find_last_executed(child, best);
}

std::size_t count_nodes(const TaskNode& node) {
    std::size_t n = 1;
    for (const TaskNode& child : node.subtasks) n += count_nodes(child);
    return n;
}

}  // namespace

std::vector<const TaskNode*> runnable_leaves(const Ptt& ptt) {
    std::vector<const TaskNode*> out;
    collect_pending_leaves(ptt.root, out);
    return out;
}

const TaskNode* last_executed_task(const Ptt& ptt) {
    const TaskNode* best = nullptr;
    find_last_executed(ptt.root, best);
    return best;
}

std::size_t node_count(const Ptt& ptt) {
    return count_nodes(ptt.root);
}

}  // namespace redloop
