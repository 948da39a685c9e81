#include "redloop/llm.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;

std::string to_string(LlmRole role) {
    switch (role) {
        case LlmRole::PlannerExpand: return "PlannerExpand";
        case LlmRole::TaskDedup: return "TaskDedup";
        case LlmRole::Prioritize: return "Prioritize";
        case LlmRole::SuccessQueryGen: return "SuccessQueryGen";
        case LlmRole::SuccessCaseAnalyze: return "SuccessCaseAnalyze";
        case LlmRole::CommandGen: return "CommandGen";
        case LlmRole::LogClassify: return "LogClassify";
        case LlmRole::LogSummarize: return "LogSummarize";
        case LlmRole::ReportGen: return "ReportGen";
    }
    return "PlannerExpand";
}

LlmRole llm_role_from_string(const std::string& s) {
    for (int i = 0; i < kLlmRoleCount; ++i) {
        const auto role = static_cast<LlmRole>(i);
        if (to_string(role) == s) return role;
    }
    throw InvariantError("unknown LLM role: \"" + s + "\"");
}

std::string role_module(LlmRole role) {
    switch (role) {
        case LlmRole::PlannerExpand:
        case LlmRole::TaskDedup: return "RePlanner";
        case LlmRole::Prioritize: return "RePrioritizer";
        case LlmRole::SuccessQueryGen:
        case LlmRole::SuccessCaseAnalyze: return "ReL2SuccessCases";
        case LlmRole::CommandGen: return "ActCommandGen";
        case LlmRole::LogClassify:
        case LlmRole::LogSummarize: return "ActLogAnalysis";
        case LlmRole::ReportGen: return "Overhead";
    }
    return "Overhead";
}

std::string JsonShape::check(const json& value) const {
    switch (kind) {
        case Kind::String:
            if (!value.is_string()) return "expected a JSON string";
            return {};
        case Kind::Array:
            if (!value.is_array()) return "expected a JSON array";
            return {};
        case Kind::Object:
            if (!value.is_object()) return "expected a JSON object";
            for (const std::string& key : required_keys) {
                if (!value.contains(key)) return "missing required key \"" + key + "\"";
            }
            return {};
    }
    return {};
}

std::int64_t whitespace_token_count(const std::string& text) {
    std::int64_t n = 0;
    bool in_tok = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_tok = false;
        } else if (!in_tok) {
            in_tok = true;
            ++n;
        }
    }
    return n;
}

// -------------------------------------------------------- ScriptedBackend

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read transcript file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_jsonl(const std::string& jsonl) {
    auto backend = std::make_unique<ScriptedBackend>();
    std::istringstream in(jsonl);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::map<long, Entry>> by_ordinal;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
        const std::string role = j.at("role").get<std::string>();
        llm_role_from_string(role);  // validate
        const long ordinal = j.at("ordinal").get<long>();
        Entry entry;
        if (j.contains("guard")) entry.guard = j.at("guard").get<std::string>();
        if (j.contains("delay_ms")) entry.delay_ms = j.at("delay_ms").get<std::int64_t>();
        const json& resp = j.at("response");
        entry.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
        by_ordinal[role][ordinal] = std::move(entry);
    }
    for (auto& [role, ordered] : by_ordinal) {
        for (auto& [ord, entry] : ordered) backend->entries_[role].push_back(std::move(entry));
    }
    return backend;
}

BackendReply ScriptedBackend::complete(LlmRole role, const std::string& prompt) {
    const std::string key = to_string(role);
    auto it = entries_.find(key);
    const std::size_t cursor = cursor_[key];
    if (it == entries_.end() || cursor >= it->second.size()) {
        throw MissingScript("no transcript entry for role " + key + " ordinal " +
                            std::to_string(cursor));
    }
    const Entry& entry = it->second[cursor];
    ++cursor_[key];
    if (entry.guard) {
        if (!std::regex_search(prompt, std::regex(*entry.guard))) {
            throw MissingScript("transcript guard for role " + key + " ordinal " +
                                std::to_string(cursor) + " did not match the rendered prompt");
        }
    }
    BackendReply reply;
    reply.text = entry.response;
    reply.injected_delay_ms = entry.delay_ms;
    return reply;
}

// ---------------------------------------------------------- RemoteBackend

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

// ----------------------------------------------------------- PromptLibrary

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin_defaults();
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt template directory not found: " + dir.string());
    }
    for (int i = 0; i < kLlmRoleCount; ++i) {
        const std::string name = to_string(static_cast<LlmRole>(i));
        const auto file = dir / (name + ".txt");
        if (std::filesystem::exists(file)) {
            std::ifstream in(file);
            std::ostringstream ss;
            ss << in.rdbuf();
            lib.templates_[name] = ss.str();
        }
    }
    return lib;
}

PromptLibrary PromptLibrary::builtin_defaults() {
    // Fallbacks so unit tests can run without the assets directory. The
    // shipped templates under assets/prompts/ override these.
    PromptLibrary lib;
    lib.templates_["PlannerExpand"] =
        "You maintain a pentesting task tree for target {{target_rhost}} (attacker "
        "{{attacker_lhost}}).\nCurrent tree:\n{{ptt_json}}\nLast executed task:\n"
        "{{last_task_json}}\nPropose follow-up tasks as JSON "
        "{\"parent\": \"<task id>\", \"newTasks\": [{\"title\", \"detail\"}]}.";
    lib.templates_["TaskDedup"] =
        "Existing tasks:\n{{existing_tasks}}\nCandidates:\n{{candidates_json}}\n"
        "Return JSON {\"keep\": [<candidate indices>]} dropping duplicates.";
    lib.templates_["Prioritize"] =
        "Runnable tasks:\n{{runnable_json}}\nTree:\n{{ptt_json}}\n"
        "Return JSON {\"task_id\": \"<id>\"} for the task to execute next.";
    lib.templates_["SuccessQueryGen"] =
        "Last executed task:\n{{last_task_json}}\nWrite a single-line search query for a "
        "repository of past successful pentests. Return JSON {\"query\": \"...\"}.";
    lib.templates_["SuccessCaseAnalyze"] =
        "Target RHOST {{target_rhost}}, attacker LHOST {{attacker_lhost}}.\nLast executed "
        "task:\n{{last_task_json}}\nRetrieved success case:\n{{success_case_json}}\n"
        "Generate follow-up tasks rewritten for the current target. Return JSON "
        "{\"Thought process (Step1)\": \"...\", \"Thought process (Step2)\": \"...\", "
        "\"newTasks\": [{\"title\", \"detail\", \"origin\": {\"reason\"}}]}.";
    lib.templates_["CommandGen"] =
        "Task:\n{{task_json}}\nTarget {{target_rhost}}, attacker {{attacker_lhost}}.\n"
        "Technique references:\n{{technique_docs}}\nAttempt history:\n{{history_json}}\n"
        "{{timeout_note}}\nReturn JSON {\"command\": \"...\", \"rationale\": \"...\"}"
        " (add \"no_faster_alternative\": true when no faster command exists).";
    lib.templates_["LogClassify"] =
        "Command:\n{{command}}\nExit code: {{exit_code}}\nLogs:\n{{logs}}\n"
        "Classify the outcome. Return JSON {\"exit_class\": \"SUCCESS\"|\"OTHERS\"}.";
    lib.templates_["LogSummarize"] =
        "Command:\n{{command}}\nLogs:\n{{logs}}\nReturn JSON {\"summary\": "
        "\"one-sentence factual summary of the evidence in the logs\"}.";
    lib.templates_["ReportGen"] =
        "Run events:\n{{events_json}}\nReturn JSON {\"narrative\": \"...\"}.";
    return lib;
}

std::string PromptLibrary::render(LlmRole role,
                                  const std::map<std::string, std::string>& context) const {
    auto it = templates_.find(to_string(role));
    if (it == templates_.end()) {
        throw ConfigError("no prompt template for role " + to_string(role));
    }
    std::string out = it->second;
    for (const auto& [key, value] : context) {
        const std::string needle = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

// -------------------------------------------------------------- LlmGateway

LlmGateway::LlmGateway(std::unique_ptr<LlmBackend> backend, PromptLibrary prompts, Clock& clock,
                       PriceTable prices)
    : backend_(std::move(backend)),
      prompts_(std::move(prompts)),
      clock_(clock),
      prices_(prices) {}

json LlmGateway::complete_structured(LlmRole role,
                                     const std::map<std::string, std::string>& context,
                                     const JsonShape& shape) {
    const std::string prompt = prompts_.render(role, context);
    LlmCall call;
    call.role = role;
    call.prompt = prompt;

    std::string current_prompt = prompt;
    std::string last_error;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        call.attempts = attempt;
        BackendReply reply;
        try {
            reply = backend_->complete(role, current_prompt);
        } catch (...) {
            calls_.push_back(call);
            throw;
        }
        if (reply.injected_delay_ms > 0) clock_.advance_ms(reply.injected_delay_ms);
        call.response = reply.text;
        call.tokens_in +=
            reply.tokens_in > 0 ? reply.tokens_in : whitespace_token_count(current_prompt);
        call.tokens_out +=
            reply.tokens_out > 0 ? reply.tokens_out : whitespace_token_count(reply.text);
        call.latency_ms += backend_->is_scripted() ? 0 : reply.latency_ms;

        json value;
        bool ok = true;
        try {
            value = json::parse(reply.text);
        } catch (const json::parse_error& e) {
            ok = false;
            last_error = std::string("invalid JSON: ") + e.what();
        }
        if (ok) {
            last_error = shape.check(value);
            ok = last_error.empty();
        }
        if (ok) {
            call.parsed_ok = true;
            calls_.push_back(call);
            return value;
        }
        current_prompt = prompt + "\n\nYour previous response failed validation: " + last_error +
                         "\nRespond again with valid JSON only.";
    }
    call.parsed_ok = false;
    calls_.push_back(call);
    throw SchemaViolation("role " + to_string(role) + ": model output failed validation after "
                          "repair retry: " + last_error);
}

ModuleLedger LlmGateway::cost_report() const {
    ModuleLedger ledger;
    for (const LlmCall& call : calls_) {
        RoleStats& stats = ledger.per_role[to_string(call.role)];
        ++stats.calls;
        stats.tokens_in += call.tokens_in;
        stats.tokens_out += call.tokens_out;
        stats.seconds += static_cast<double>(call.latency_ms) / 1000.0;
        const double dollars =
            static_cast<double>(call.tokens_in) * prices_.usd_per_mtok_in / 1e6 +
            static_cast<double>(call.tokens_out) * prices_.usd_per_mtok_out / 1e6;
        stats.dollars += dollars;
        ++ledger.total.calls;
        ledger.total.tokens_in += call.tokens_in;
        ledger.total.tokens_out += call.tokens_out;
        ledger.total.seconds += static_cast<double>(call.latency_ms) / 1000.0;
        ledger.total.dollars += dollars;
    }
    return ledger;
}

}  // namespace redloop
