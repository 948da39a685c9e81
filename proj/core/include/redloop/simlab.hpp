#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "redloop/clock.hpp"
#include "redloop/executor.hpp"

namespace redloop {

/// Deterministic stand-in for the target network: command patterns map to
/// canned outcomes, so end-to-end runs need no live host.
struct ScenarioRule {
    std::string match;  // regex over the command string
    std::string stdout_text;
    std::string stderr_text;
    int exit_code = 0;
    std::int64_t delay_ms = 0;
    bool grants_shell = false;

    std::regex compiled;  // built at load time
};

struct ScenarioHost {
    std::string ip;
    struct Port {
        int port = 0;
        std::string banner;
    };
    std::vector<Port> tcp_ports;
};

struct Scenario {
    std::string name;
    std::vector<ScenarioHost> hosts;
    std::vector<ScenarioRule> rules;  // first match wins, file order
    ScenarioRule default_rule;        // catches unmatched commands
};

/// Parses and validates a scenario JSON file. Invalid regexes, negative
/// delays and multiple grants_shell rules are rejected with ScenarioError.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<inline>");

/// Executes against the scenario: first matching rule fires, delay_ms is
/// charged to the (virtual) clock, and a delay at or past the timeout turns
/// into a timeout kill (exit_code -1).
class SimExecutor final : public CommandExecutor {
public:
    SimExecutor(Scenario scenario, Clock& clock)
        : scenario_(std::move(scenario)), clock_(&clock) {}

    using CommandExecutor::execute;
    RawOutcome execute(const CommandSpec& spec, std::int64_t effective_timeout_ms) override;

    const Scenario& scenario() const { return scenario_; }

private:
    Scenario scenario_;
    Clock* clock_;
};

}  // namespace redloop
