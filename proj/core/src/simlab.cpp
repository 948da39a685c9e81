#include "redloop/simlab.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;

namespace {

ScenarioRule parse_rule(const json& j, const std::string& where, bool allow_match_absent) {
    ScenarioRule rule;
    if (j.contains("match")) {
        rule.match = j.at("match").get<std::string>();
    } else if (!allow_match_absent) {
        throw ScenarioError(where + ": missing \"match\" pattern");
    }
    rule.stdout_text = j.value("stdout", "");
    rule.stderr_text = j.value("stderr", "");
    rule.exit_code = j.value("exit_code", 0);
    rule.delay_ms = j.value("delay_ms", static_cast<std::int64_t>(0));
    rule.grants_shell = j.value("grants_shell", false);
    if (rule.delay_ms < 0) throw ScenarioError(where + ": delay_ms must be non-negative");
    if (!rule.match.empty()) {
        try {
            rule.compiled = std::regex(rule.match);
        } catch (const std::regex_error& e) {
            throw ScenarioError(where + ": invalid regex \"" + rule.match + "\": " + e.what());
        }
    }
    return rule;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(origin + ": not valid JSON: " + e.what());
    }
    Scenario scenario;
    try {
        scenario.name = doc.at("name").get<std::string>();
        for (const auto& h : doc.value("hosts", json::array())) {
            ScenarioHost host;
            host.ip = h.at("ip").get<std::string>();
            for (const auto& p : h.value("tcp_ports", json::array())) {
                host.tcp_ports.push_back(
                    {p.at("port").get<int>(), p.value("banner", std::string())});
            }
            scenario.hosts.push_back(std::move(host));
        }
        int shell_rules = 0;
        std::size_t idx = 0;
        for (const auto& r : doc.value("rules", json::array())) {
            const std::string where = origin + ": rules[" + std::to_string(idx++) + "]";
            ScenarioRule rule = parse_rule(r, where, false);
            if (rule.grants_shell) ++shell_rules;
            scenario.rules.push_back(std::move(rule));
        }
        if (shell_rules > 1) {
            throw ScenarioError(origin + ": at most one rule may set grants_shell");
        }
        if (doc.contains("default_rule")) {
            scenario.default_rule = parse_rule(doc["default_rule"], origin + ": default_rule",
                                               true);
            if (scenario.default_rule.grants_shell) {
                throw ScenarioError(origin + ": default_rule may not grant a shell");
            }
        } else {
            scenario.default_rule.stderr_text = "sh: 1: command produced no scripted outcome\n";
            scenario.default_rule.exit_code = 1;
        }
    } catch (const json::exception& e) {
        throw ScenarioError(origin + ": " + e.what());
    }
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

RawOutcome SimExecutor::execute(const CommandSpec& spec, std::int64_t effective_timeout_ms) {
    const ScenarioRule* rule = &scenario_.default_rule;
    for (const ScenarioRule& r : scenario_.rules) {
        if (std::regex_search(spec.command, r.compiled)) {
            rule = &r;
            break;
        }
    }
    RawOutcome outcome;
    if (rule->delay_ms >= effective_timeout_ms) {
        clock_->advance_ms(effective_timeout_ms);
        outcome.duration_ms = effective_timeout_ms;
        outcome.timed_out = true;
        outcome.exit_code = -1;
        return outcome;
    }
    clock_->advance_ms(rule->delay_ms);
    outcome.duration_ms = rule->delay_ms;
    outcome.exit_code = rule->exit_code;
    outcome.stdout_text = rule->stdout_text;
    outcome.stderr_text = rule->stderr_text;
    return outcome;
}

}  // namespace redloop
