#include "redloop/planner.hpp"

#include <algorithm>
#include <set>

#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;

RePlanner::RePlanner(LlmGateway& gateway, const RagStore* rag, Clock& clock, EventLog* events,
                     PlannerConfig config)
    : gateway_(gateway), rag_(rag), clock_(clock), events_(events), config_(config) {}

std::string normalize_for_dedup(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending_space = true;
        }
    }
    return out;
}

bool contains_ip_token(const std::string& text, const std::string& ip) {
    std::size_t pos = 0;
    while ((pos = text.find(ip, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 || (!std::isdigit(static_cast<unsigned char>(text[pos - 1])) &&
                         text[pos - 1] != '.');
        const std::size_t end = pos + ip.size();
        const bool right_ok =
            end >= text.size() || !std::isdigit(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) return true;
        pos = end;
    }
    return false;
}

json task_node_to_json(const TaskNode& node) {
    json results = json::array();
    for (const ActResult& r : node.act_results) {
        results.push_back({{"command", r.command},
                           {"timeout_sec", r.timeout_sec},
                           {"exit_code", r.exit_code},
                           {"exit_class", to_string(r.exit_class)},
                           {"log_summary", r.log_summary}});
    }
    return json{{"id", node.id.str()},
                {"title", node.title},
                {"detail", node.detail},
                {"status", to_string(node.status)},
                {"act_results", std::move(results)}};
}

std::string RePlanner::gen_success_query(const TaskNode& last_task) {
    const json response = gateway_.complete_structured(
        LlmRole::SuccessQueryGen, {{"last_task_json", task_node_to_json(last_task).dump(2)}},
        JsonShape::object({"query"}));
    return response.at("query").get<std::string>();
}

AnalyzeResult RePlanner::analyze_success_case(const TaskNode& last_task,
                                              const std::optional<Ptt>& retrieved,
                                              const EnvMetadata& env) {
    AnalyzeResult result;
    if (!retrieved) return result;  // no success case, nothing to extend

    const json response = gateway_.complete_structured(
        LlmRole::SuccessCaseAnalyze,
        {{"target_rhost", env.rhost},
         {"attacker_lhost", env.lhost},
         {"last_task_json", task_node_to_json(last_task).dump(2)},
         {"success_case_json", serialize_ptt(*retrieved)}},
        JsonShape::object({"newTasks"}));

    const std::string foreign_rhost = retrieved->metadata.rhost;
    for (const json& t : response.at("newTasks")) {
        NewTaskProposal proposal;
        proposal.title = t.value("title", "");
        proposal.detail = t.value("detail", "");
        if (t.contains("origin") && t["origin"].is_object()) {
            proposal.origin_reason = t["origin"].value("reason", "");
        }
        if (proposal.title.empty() || proposal.detail.empty()) continue;
        if (foreign_rhost != env.rhost &&
            (contains_ip_token(proposal.title, foreign_rhost) ||
             contains_ip_token(proposal.detail, foreign_rhost))) {
            // the model leaked the success case's target; never merge it
            result.lint_rejected.push_back(proposal.title);
            continue;
        }
        result.proposals.push_back(std::move(proposal));
    }
    return result;
}

namespace {

void collect_normalized(const TaskNode& node, std::set<std::string>& out) {
    out.insert(normalize_for_dedup(node.title + " " + node.detail));
    for (const TaskNode& child : node.subtasks) collect_normalized(child, out);
}

void collect_titles(const TaskNode& node, json& out) {
    out.push_back({{"id", node.id.str()}, {"title", node.title}, {"detail", node.detail}});
    for (const TaskNode& child : node.subtasks) collect_titles(child, out);
}

}  // namespace

std::vector<NewTaskProposal> RePlanner::dedup(const std::vector<NewTaskProposal>& candidates,
                                              const Ptt& ptt) {
    std::set<std::string> seen;
    collect_normalized(ptt.root, seen);

    std::vector<NewTaskProposal> filtered;
    for (const NewTaskProposal& c : candidates) {
        const std::string key = normalize_for_dedup(c.title + " " + c.detail);
        if (seen.count(key)) continue;
        seen.insert(key);
        filtered.push_back(c);
    }
    if (filtered.empty()) return filtered;

    json existing = json::array();
    collect_titles(ptt.root, existing);
    json candidates_json = json::array();
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        candidates_json.push_back(
            {{"index", i}, {"title", filtered[i].title}, {"detail", filtered[i].detail}});
    }

    json verdict;
    try {
        verdict = gateway_.complete_structured(LlmRole::TaskDedup,
                                               {{"existing_tasks", existing.dump(2)},
                                                {"candidates_json", candidates_json.dump(2)}},
                                               JsonShape::object({"keep"}));
    } catch (const Error&) {
        return filtered;  // fail open: pre-filter only
    }

    std::set<std::size_t> keep;
    for (const json& idx : verdict.at("keep")) {
        if (idx.is_number_unsigned() || idx.is_number_integer()) {
            keep.insert(idx.get<std::size_t>());
        }
    }
    std::vector<NewTaskProposal> out;
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        if (keep.count(i)) out.push_back(filtered[i]);
    }
    return out;
}

PlanStep RePlanner::expand(Ptt& ptt, const TaskNode* last_task) {
    PlanStep step;
    step.step_index = ++steps_;

    std::vector<NewTaskProposal> candidates;
    if (config_.success_cases_enabled && rag_ && last_task) {
        const std::int64_t l2_start = clock_.now_ms();
        const std::string query = gen_success_query(*last_task);
        const auto hits = rag_->query(Corpus::SuccessCases, query, config_.success_case_hits);
        std::optional<Ptt> retrieved;
        if (!hits.empty()) retrieved = parse_ptt(hits.front().doc->raw);
        AnalyzeResult analyzed = analyze_success_case(*last_task, retrieved, ptt.metadata);
        candidates = std::move(analyzed.proposals);
        step.lint_rejected = std::move(analyzed.lint_rejected);
        step.l2_ms = clock_.now_ms() - l2_start;
    }

    const json response = gateway_.complete_structured(
        LlmRole::PlannerExpand,
        {{"target_rhost", ptt.metadata.rhost},
         {"attacker_lhost", ptt.metadata.lhost},
         {"ptt_json", serialize_ptt(ptt)},
         {"last_task_json", last_task ? task_node_to_json(*last_task).dump(2) : "null"}},
        JsonShape::object({"newTasks"}));
    for (const json& t : response.at("newTasks")) {
        NewTaskProposal proposal;
        proposal.title = t.value("title", "");
        proposal.detail = t.value("detail", "");
        if (!proposal.title.empty()) candidates.push_back(std::move(proposal));
    }

    TaskId parent = TaskId::root();
    if (response.contains("parent") && response["parent"].is_string()) {
        parent = TaskId::parse(response["parent"].get<std::string>());
    } else if (last_task && !last_task->id.is_root()) {
        parent = last_task->id.parent();
    }

    const std::vector<NewTaskProposal> kept = dedup(candidates, ptt);
    step.dedup_dropped = static_cast<int>(candidates.size() - kept.size());
    step.added_task_ids = merge_new_tasks(ptt, parent, kept);

    if (events_) {
        json added = json::array();
        for (const TaskId& id : step.added_task_ids) added.push_back(id.str());
        events_->emit("plan_step", {{"step_index", step.step_index},
                                    {"added_task_ids", added},
                                    {"dedup_dropped", step.dedup_dropped},
                                    {"lint_rejected", step.lint_rejected},
                                    {"l2_ms", step.l2_ms}});
        events_->emit("tasks_merged", {{"parent", parent.str()}, {"count", added.size()}});
    }
    return step;
}

TaskId RePlanner::prioritize(const Ptt& ptt) {
    const auto leaves = runnable_leaves(ptt);
    if (leaves.empty()) throw NoRunnableTasks("no pending leaf tasks remain");

    json runnable = json::array();
    for (const TaskNode* leaf : leaves) {
        runnable.push_back({{"id", leaf->id.str()}, {"title", leaf->title}});
    }

    json response;
    try {
        response = gateway_.complete_structured(LlmRole::Prioritize,
                                                {{"runnable_json", runnable.dump(2)},
                                                 {"ptt_json", serialize_ptt(ptt)}},
                                                JsonShape::object({"task_id"}));
    } catch (const MissingScript&) {
        return leaves.front()->id;  // deterministic DFS-first fallback
    }

    const std::string chosen = response.at("task_id").get<std::string>();
    TaskId id;
    try {
        id = TaskId::parse(chosen);
    } catch (const Error&) {
        id = TaskId{};  // force validation failure below
    }
    const bool valid = std::any_of(leaves.begin(), leaves.end(),
                                   [&](const TaskNode* leaf) { return leaf->id == id; });
    if (!valid) {
        if (config_.lenient_prioritizer) return leaves.front()->id;
        throw NonLeafSelected("prioritizer chose \"" + chosen +
                              "\", which is not a runnable leaf task");
    }
    return id;
}

}  // namespace redloop
