#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redloop/clock.hpp"

namespace redloop {

enum class LlmRole {
    PlannerExpand,
    TaskDedup,
    Prioritize,
    SuccessQueryGen,
    SuccessCaseAnalyze,
    CommandGen,
    LogClassify,
    LogSummarize,
    ReportGen,
};

constexpr int kLlmRoleCount = 9;
std::string to_string(LlmRole role);
LlmRole llm_role_from_string(const std::string& s);

/// Time/cost attribution bucket for a role.
std::string role_module(LlmRole role);

struct LlmCall {
    LlmRole role = LlmRole::PlannerExpand;
    std::string prompt;
    std::string response;
    bool parsed_ok = false;
    int attempts = 1;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    std::int64_t latency_ms = 0;
};

struct PriceTable {
    double usd_per_mtok_in = 2.50;
    double usd_per_mtok_out = 10.00;
};

struct RoleStats {
    std::int64_t calls = 0;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double seconds = 0.0;
    double dollars = 0.0;
};

struct ModuleLedger {
    std::map<std::string, RoleStats> per_role;  // keyed by role name
    RoleStats total;
};

/// Minimal shape contract for structured model output.
struct JsonShape {
    enum class Kind { String, Object, Array } kind = Kind::Object;
    std::vector<std::string> required_keys;  // for Object

    static JsonShape string() { return {Kind::String, {}}; }
    static JsonShape object(std::vector<std::string> keys) {
        return {Kind::Object, std::move(keys)};
    }
    static JsonShape array() { return {Kind::Array, {}}; }

    /// Returns an error description, or empty when the value conforms.
    std::string check(const nlohmann::json& value) const;
};

struct BackendReply {
    std::string text;
    std::int64_t tokens_in = 0;   // 0 = let the gateway estimate
    std::int64_t tokens_out = 0;
    std::int64_t latency_ms = 0;
    std::int64_t injected_delay_ms = 0;  // scripted only: advances the clock
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual BackendReply complete(LlmRole role, const std::string& prompt) = 0;
    virtual bool is_scripted() const = 0;
};

/// Replays canned responses from a JSON-lines transcript. Entries are keyed
/// by (role, ordinal within role); an optional "guard" regex must match the
/// rendered prompt. Missing entries raise MissingScript.
class ScriptedBackend final : public LlmBackend {
public:
    static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
    static std::unique_ptr<ScriptedBackend> from_jsonl(const std::string& jsonl);

    BackendReply complete(LlmRole role, const std::string& prompt) override;
    bool is_scripted() const override { return true; }

private:
    struct Entry {
        std::optional<std::string> guard;
        std::string response;
        std::int64_t delay_ms = 0;
    };
    std::map<std::string, std::vector<Entry>> entries_;  // role name -> ordered entries
    std::map<std::string, std::size_t> cursor_;
};

struct RemoteConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.0;
    int timeout_sec = 120;
};

/// Standard chat-completions JSON over HTTP(S).
class RemoteBackend final : public LlmBackend {
public:
    explicit RemoteBackend(RemoteConfig config);
    BackendReply complete(LlmRole role, const std::string& prompt) override;
    bool is_scripted() const override { return false; }

private:
    RemoteConfig config_;
};

/// Loads per-role prompt templates ("<role>.txt", "{{placeholder}}" syntax).
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);
    static PromptLibrary builtin_defaults();

    std::string render(LlmRole role, const std::map<std::string, std::string>& context) const;

private:
    std::map<std::string, std::string> templates_;  // role name -> template
};

/// Uniform structured-output interface over one backend; owns token/cost
/// accounting and the auditable call log.
class LlmGateway {
public:
    LlmGateway(std::unique_ptr<LlmBackend> backend, PromptLibrary prompts, Clock& clock,
               PriceTable prices = {});

    /// Renders the role's template with `context`, calls the backend, and
    /// validates the response against `shape`. On malformed output performs
    /// exactly one repair retry (re-prompt with the validation error
    /// appended) before throwing SchemaViolation. An LlmCall is recorded
    /// either way.
    nlohmann::json complete_structured(LlmRole role,
                                       const std::map<std::string, std::string>& context,
                                       const JsonShape& shape);

    ModuleLedger cost_report() const;
    const std::vector<LlmCall>& calls() const { return calls_; }
    bool scripted() const { return backend_->is_scripted(); }

private:
    std::unique_ptr<LlmBackend> backend_;
    PromptLibrary prompts_;
    Clock& clock_;
    PriceTable prices_;
    std::vector<LlmCall> calls_;
};

std::int64_t whitespace_token_count(const std::string& text);

}  // namespace redloop
