#include "redloop/act.hpp"

#include <algorithm>
#include <regex>

#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;

std::vector<std::string> ActConfig::default_shell_markers() {
    return {
        "Meterpreter session .* (opened|established)",
        "Command shell session .* opened",
        "reverse shell .* established",
    };
}

ActEngine::ActEngine(LlmGateway& gateway, const RagStore* rag, CommandExecutor& executor,
                     EventLog* events, ActConfig config)
    : gateway_(gateway),
      rag_(rag),
      executor_(executor),
      events_(events),
      config_(std::move(config)) {}

namespace {

json act_result_to_json(const ActResult& r) {
    return json{{"command", r.command},
                {"timeout_sec", r.timeout_sec},
                {"exit_code", r.exit_code},
                {"exit_class", to_string(r.exit_class)},
                {"log_summary", r.log_summary}};
}

std::string render_technique_docs(const std::vector<RagHit>& hits) {
    std::string out;
    for (const RagHit& hit : hits) {
        out += "## " + hit.doc->title + "\n" + hit.doc->body + "\n\n";
    }
    return out.empty() ? "(no reference documents retrieved)" : out;
}

std::string first_line(const std::string& text) {
    const std::size_t nl = text.find('\n');
    std::string line = nl == std::string::npos ? text : text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

CommandSpec ActEngine::generate_command(const TaskNode& task, const EnvMetadata& env,
                                        const std::vector<ActResult>& history,
                                        const std::vector<RagHit>& hits,
                                        const std::optional<CommandSpec>& previous,
                                        bool previous_timed_out) {
    json history_json = json::array();
    for (const ActResult& r : history) history_json.push_back(act_result_to_json(r));
    json task_json = {{"id", task.id.str()}, {"title", task.title}, {"detail", task.detail}};

    std::string timeout_note = "Initial timeout: " +
                               std::to_string(previous ? previous->timeout_sec
                                                       : config_.initial_timeout_sec) +
                               " seconds.";
    if (previous_timed_out && previous) {
        timeout_note = "The previous command timed out after " +
                       std::to_string(previous->timeout_sec) +
                       " seconds. Propose a faster alternative command; if none exists, set "
                       "\"no_faster_alternative\": true.";
    }

    const json response = gateway_.complete_structured(
        LlmRole::CommandGen,
        {{"task_json", task_json.dump(2)},
         {"target_rhost", env.rhost},
         {"attacker_lhost", env.lhost},
         {"technique_docs", render_technique_docs(hits)},
         {"history_json", history_json.dump(2)},
         {"timeout_note", timeout_note}},
        JsonShape::object({"command"}));

    CommandSpec spec;
    spec.command = response.at("command").get<std::string>();
    spec.rationale = response.value("rationale", "");
    spec.attempt = previous ? previous->attempt + 1 : 1;
    spec.timeout_sec = previous ? previous->timeout_sec : config_.initial_timeout_sec;

    if (previous_timed_out && previous) {
        const bool no_alternative =
            response.value("no_faster_alternative", false) || spec.command == previous->command;
        if (no_alternative) {
            // no faster tool: keep the command, allow more time
            spec.command = previous->command;
            spec.timeout_sec = previous->timeout_sec * 2;
        }
    }
    return spec;
}

Classification ActEngine::classify(const RawOutcome& outcome, const std::string& command) {
    Classification cls;
    if (outcome.timed_out) {
        cls.exit_class = ExitClass::Timeout;
        cls.log_summary.clear();
        return cls;
    }

    const std::string logs = outcome.stdout_text + "\n" + outcome.stderr_text;
    if (outcome.exit_code == 127 || logs.find("command not found") != std::string::npos ||
        logs.find(": not found") != std::string::npos) {
        cls.exit_class = ExitClass::CommandNotFound;
        cls.log_summary = "Command unavailable in the execution environment: " +
                          (outcome.stderr_text.empty() ? command : first_line(outcome.stderr_text));
        return cls;
    }
    if (logs.find("No such file or directory") != std::string::npos) {
        cls.exit_class = ExitClass::FileNotFound;
        cls.log_summary = "Referenced file is missing: " +
                          (outcome.stderr_text.empty() ? command : first_line(outcome.stderr_text));
        return cls;
    }

    for (const std::string& marker : config_.shell_markers) {
        if (std::regex_search(logs, std::regex(marker))) {
            cls.shell_detected = true;
            cls.exit_class = ExitClass::Success;
            break;
        }
    }

    if (!cls.shell_detected) {
        const json verdict = gateway_.complete_structured(
            LlmRole::LogClassify,
            {{"command", command},
             {"exit_code", std::to_string(outcome.exit_code)},
             {"logs", logs}},
            JsonShape::object({"exit_class"}));
        const std::string label = verdict.at("exit_class").get<std::string>();
        cls.exit_class = label == "SUCCESS" ? ExitClass::Success : ExitClass::Others;
    }

    const json summary = gateway_.complete_structured(
        LlmRole::LogSummarize, {{"command", command}, {"logs", logs}},
        JsonShape::object({"summary"}));
    cls.log_summary = summary.at("summary").get<std::string>();
    return cls;
}

TaskRunResult ActEngine::run_task(Ptt& ptt, const TaskId& id, const EnvMetadata& env) {
    const TaskNode* node = ptt.find(id);
    if (!node) throw UnknownParent("no such task: \"" + id.str() + "\"");
    if (node->status == TaskStatus::Pending) mark_in_progress(ptt, id);

    TaskRunResult out;
    std::optional<CommandSpec> previous;
    bool previous_timed_out = false;

    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        node = ptt.find(id);
        std::vector<RagHit> hits;
        if (rag_) {
            hits = rag_->query(Corpus::Techniques, node->title + " " + node->detail,
                               config_.technique_hits);
        }
        const CommandSpec spec = generate_command(*node, env, node->act_results, hits, previous,
                                                  previous_timed_out);
        if (events_) {
            events_->emit("command_started", {{"task_id", id.str()},
                                              {"attempt", attempt},
                                              {"command", spec.command},
                                              {"timeout_sec", spec.timeout_sec}});
        }

        std::int64_t effective_ms = static_cast<std::int64_t>(spec.timeout_sec) * 1000;
        if (remaining_budget_ms_) {
            effective_ms = std::min(effective_ms, std::max<std::int64_t>(remaining_budget_ms_(),
                                                                         0));
        }
        const RawOutcome outcome = executor_.execute(spec, effective_ms);
        if (events_) {
            events_->emit("command_finished", {{"task_id", id.str()},
                                               {"command", spec.command},
                                               {"exit_code", outcome.exit_code},
                                               {"duration_ms", outcome.duration_ms},
                                               {"timed_out", outcome.timed_out}});
        }

        const Classification cls = classify(outcome, spec.command);
        if (events_) {
            events_->emit("classified", {{"task_id", id.str()},
                                         {"exit_class", to_string(cls.exit_class)},
                                         {"shell_detected", cls.shell_detected}});
        }

        ActResult result;
        result.command = spec.command;
        result.timeout_sec = spec.timeout_sec;
        result.exit_code = outcome.exit_code;
        result.exit_class = cls.exit_class;
        result.log_summary = cls.log_summary;

        const bool conclusive =
            cls.exit_class == ExitClass::Success && !cls.log_summary.empty();
        const bool fail_fast = cls.exit_class == ExitClass::CommandNotFound ||
                               cls.exit_class == ExitClass::FileNotFound;
        const bool exhausted = attempt == config_.max_attempts;

        RecordDisposition dispo = RecordDisposition::Continue;
        if (conclusive) {
            dispo = RecordDisposition::Conclude;
        } else if (fail_fast || exhausted) {
            dispo = RecordDisposition::Exhausted;
        }
        record_act_result(ptt, id, result, dispo);
        out.results.push_back(result);

        if (conclusive) {
            out.status = TaskStatus::Completed;
            out.shell_detected = cls.shell_detected;
            out.shell_command = cls.shell_detected ? spec.command : "";
            return out;
        }
        if (fail_fast) {
            out.status = TaskStatus::Failed;
            out.abort = AbortSignal::FailFast;
            return out;
        }
        previous = spec;
        previous_timed_out = cls.exit_class == ExitClass::Timeout;
    }
    out.status = TaskStatus::Failed;
    return out;
}

}  // namespace redloop
