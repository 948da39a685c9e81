#include "redloop/orchestrator.hpp"

#include <fstream>

#include "redloop/errors.hpp"
#include "redloop/planner.hpp"
#include "redloop/rag.hpp"
#include "redloop/report.hpp"
#include "redloop/simlab.hpp"

namespace redloop {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& module_buckets() {
    static const std::vector<std::string> buckets = {
        "RePlanner",  "RePrioritizer", "ReL2SuccessCases", "ActCommandGen",
        "ActExecution", "ActLogAnalysis", "Overhead",
    };
    return buckets;
}

bool cidr_contains(const std::string& cidr, const std::string& ip) {
    const std::size_t slash = cidr.find('/');
    const std::string base = slash == std::string::npos ? cidr : cidr.substr(0, slash);
    const int bits = slash == std::string::npos ? 32 : std::stoi(cidr.substr(slash + 1));
    if (!is_ipv4(base) || !is_ipv4(ip) || bits < 0 || bits > 32) return false;

    auto to_u32 = [](const std::string& quad) {
        std::uint32_t v = 0;
        std::size_t pos = 0;
        for (int i = 0; i < 4; ++i) {
            const std::size_t dot = quad.find('.', pos);
            v = (v << 8) | static_cast<std::uint32_t>(std::stoi(quad.substr(pos, dot - pos)));
            pos = dot + 1;
        }
        return v;
    };
    const std::uint32_t mask = bits == 0 ? 0 : ~std::uint32_t{0} << (32 - bits);
    return (to_u32(base) & mask) == (to_u32(ip) & mask);
}

namespace {

void validate(const RunConfig& config) {
    if (!is_ipv4(config.rhost)) throw ConfigError("target RHOST must be an IPv4 address");
    if (!is_ipv4(config.lhost)) throw ConfigError("attacker LHOST must be an IPv4 address");
    if (config.rhost == config.lhost) throw ConfigError("RHOST and LHOST must differ");
    if (config.max_wall_sec <= 0) throw ConfigError("max_wall_sec must be positive");
    if (config.max_steps <= 0) throw ConfigError("max_steps must be positive");
    if (config.executor == ExecutorBackend::Sim) {
        if (config.scenario_path.empty()) {
            throw ConfigError("sim executor needs a scenario file");
        }
        if (!fs::is_regular_file(config.scenario_path)) {
            throw ConfigError("scenario file not found: " + config.scenario_path.string());
        }
        if (config.model == ModelBackend::Remote && !config.allow_remote_with_sim) {
            throw ConfigError("refusing remote model against a simulated target without "
                              "explicit opt-in");
        }
    } else {
        if (!config.allow_real_exec) {
            throw ConfigError("real command execution requires --allow-real-exec");
        }
        if (config.target_cidr.empty() || !cidr_contains(config.target_cidr, config.rhost)) {
            throw ConfigError("real execution requires --target-cidr covering the target");
        }
    }
    if (config.model == ModelBackend::Scripted) {
        if (config.transcripts_path.empty()) {
            throw ConfigError("scripted model backend needs a transcript file");
        }
        if (!fs::is_regular_file(config.transcripts_path)) {
            throw ConfigError("transcript file not found: " +
                              config.transcripts_path.string());
        }
    }
}

json ledger_to_json(const ModuleLedger& ledger) {
    json per_role = json::object();
    for (const auto& [role, stats] : ledger.per_role) {
        per_role[role] = {{"calls", stats.calls},
                          {"tokens_in", stats.tokens_in},
                          {"tokens_out", stats.tokens_out},
                          {"seconds", stats.seconds},
                          {"dollars", stats.dollars}};
    }
    return json{{"per_role", per_role},
                {"total",
                 {{"calls", ledger.total.calls},
                  {"tokens_in", ledger.total.tokens_in},
                  {"tokens_out", ledger.total.tokens_out},
                  {"seconds", ledger.total.seconds},
                  {"dollars", ledger.total.dollars}}}};
}

}  // namespace

std::map<std::string, double> time_breakdown(const std::vector<Event>& events) {
    std::map<std::string, double> out;
    for (const std::string& bucket : module_buckets()) out[bucket] = 0.0;

    std::int64_t prev = 0;
    for (const Event& e : events) {
        if (e.wall_ms < prev) throw CorruptLog("event wall_ms went backwards at seq " +
                                               std::to_string(e.seq));
        const std::int64_t dur = e.wall_ms - prev;
        prev = e.wall_ms;
        if (e.kind == "run_started" || e.kind == "run_finished") {
            out["Overhead"] += dur;
        } else if (e.kind == "plan_step") {
            const std::int64_t l2 = e.payload.value("l2_ms", static_cast<std::int64_t>(0));
            out["ReL2SuccessCases"] += std::min(l2, dur);
            out["RePlanner"] += dur - std::min(l2, dur);
        } else if (e.kind == "tasks_merged") {
            out["RePlanner"] += dur;
        } else if (e.kind == "task_selected") {
            out["RePrioritizer"] += dur;
        } else if (e.kind == "command_started") {
            out["ActCommandGen"] += dur;
        } else if (e.kind == "command_finished") {
            out["ActExecution"] += dur;
        } else if (e.kind == "classified") {
            out["ActLogAnalysis"] += dur;
        } else {
            throw CorruptLog("unknown event kind \"" + e.kind + "\" at seq " +
                             std::to_string(e.seq));
        }
    }
    for (auto& [bucket, ms] : out) ms /= 1000.0;
    return out;
}

RunReport run(const RunConfig& config) {
    validate(config);

    std::unique_ptr<Clock> owned_clock;
    Clock* clock = config.clock;
    if (!clock) {
        if (config.executor == ExecutorBackend::Sim) {
            owned_clock = std::make_unique<VirtualClock>();
        } else {
            owned_clock = std::make_unique<SystemClock>();
        }
        clock = owned_clock.get();
    }

    // retrieval corpora
    RagStore rag;
    bool have_rag = false;
    if (!config.index_file.empty()) {
        rag = RagStore::load(config.index_file);
        have_rag = true;
    } else if (!config.corpora_dir.empty()) {
        const fs::path techniques = config.corpora_dir / "techniques";
        const fs::path success_cases = config.corpora_dir / "success_cases";
        if (fs::is_directory(techniques)) rag.ingest(techniques, Corpus::Techniques);
        if (config.success_cases_enabled && fs::is_directory(success_cases)) {
            rag.ingest(success_cases, Corpus::SuccessCases);
        }
        have_rag = true;
    }

    // model backend
    std::unique_ptr<LlmBackend> backend;
    if (config.model == ModelBackend::Scripted) {
        backend = ScriptedBackend::from_file(config.transcripts_path);
    } else {
        backend = std::make_unique<RemoteBackend>(config.remote);
    }
    PromptLibrary prompts = config.prompts_dir.empty()
                                ? PromptLibrary::builtin_defaults()
                                : PromptLibrary::load(config.prompts_dir);
    LlmGateway gateway(std::move(backend), std::move(prompts), *clock, config.prices);

    // executor backend
    std::unique_ptr<CommandExecutor> executor;
    if (config.executor == ExecutorBackend::Sim) {
        executor = std::make_unique<SimExecutor>(load_scenario(config.scenario_path), *clock);
    } else {
        ShellExecutor::Options options;
        options.working_dir = config.working_dir;
        executor = std::make_unique<ShellExecutor>(options);
    }

    const std::int64_t start_ms = clock->now_ms();
    EventLog events(*clock, start_ms);

    PlannerConfig planner_config;
    planner_config.success_cases_enabled = config.success_cases_enabled;
    planner_config.lenient_prioritizer = config.lenient_prioritizer;
    RePlanner planner(gateway, have_rag ? &rag : nullptr, *clock, &events, planner_config);

    ActEngine act(gateway, have_rag ? &rag : nullptr, *executor, &events, config.act);
    const std::int64_t budget_ms = static_cast<std::int64_t>(config.max_wall_sec) * 1000;
    act.set_budget([clock, start_ms, budget_ms] {
        return budget_ms - (clock->now_ms() - start_ms);
    });

    Ptt ptt;
    ptt.metadata.started_at = format_rfc3339(start_ms);
    ptt.metadata.status = RunStatus::Running;
    ptt.metadata.lhost = config.lhost;
    ptt.metadata.rhost = config.rhost;
    ptt.metadata.target_description = config.target_description;
    ptt.root.id = TaskId::root();
    ptt.root.title = "Reconnaissance";
    ptt.root.status = TaskStatus::Pending;

    events.emit("run_started", {{"rhost", config.rhost},
                                {"lhost", config.lhost},
                                {"executor", config.executor == ExecutorBackend::Sim ? "sim"
                                                                                     : "real"},
                                {"model", config.model == ModelBackend::Scripted ? "scripted"
                                                                                 : "remote"},
                                {"success_cases_enabled", config.success_cases_enabled}});

    RunReport report;
    const TaskNode* last_task = nullptr;
    std::string narrative;
    RunStatus outcome = RunStatus::Failure;

    auto elapsed_ms = [&] { return clock->now_ms() - start_ms; };

    try {
        for (;;) {
            if (elapsed_ms() >= budget_ms) {
                outcome = RunStatus::Aborted;
                narrative = "Wall-clock budget of " + std::to_string(config.max_wall_sec) +
                            " seconds exhausted.";
                break;
            }
            if (planner.steps_taken() >= config.max_steps) {
                outcome = RunStatus::Failure;
                narrative = "Step budget of " + std::to_string(config.max_steps) +
                            " expansions exhausted without obtaining a shell.";
                break;
            }

            planner.expand(ptt, last_task);

            if (runnable_leaves(ptt).empty()) {
                outcome = RunStatus::Failure;
                narrative = "Planner produced no further runnable tasks.";
                break;
            }

            TaskId next;
            try {
                next = planner.prioritize(ptt);
            } catch (const NonLeafSelected& e) {
                outcome = RunStatus::Aborted;
                narrative = e.what();
                break;
            }
            events.emit("task_selected", {{"task_id", next.str()}});

            const TaskRunResult result = act.run_task(ptt, next, ptt.metadata);
            last_task = ptt.find(next);

            if (result.shell_detected) {
                outcome = RunStatus::Success;
                report.shell_command = result.shell_command;
                break;
            }
            if (result.abort == AbortSignal::FailFast) {
                outcome = RunStatus::Aborted;
                const ActResult& failing = result.results.back();
                narrative = "Fail-fast: command \"" + failing.command + "\" ended with " +
                            to_string(failing.exit_class) +
                            "; the environment needs a fix before another run.";
                break;
            }
        }
    } catch (const Error& e) {
        // in-loop failures become outcomes, never crashes
        outcome = RunStatus::Aborted;
        narrative = std::string("Run aborted: ") + e.what();
    }

    const std::int64_t end_ms = clock->now_ms();
    ptt.metadata.finished_at = format_rfc3339(end_ms);
    ptt.metadata.status = outcome;

    report.outcome = outcome;
    report.steps = planner.steps_taken();
    report.elapsed_sec = static_cast<double>(end_ms - start_ms) / 1000.0;
    report.ledger = gateway.cost_report();
    report.failure_narrative = outcome == RunStatus::Success ? "" : narrative;

    events.emit("run_finished",
                {{"outcome", to_string(outcome)},
                 {"shell_command", report.shell_command ? json(*report.shell_command)
                                                        : json(nullptr)},
                 {"steps", report.steps},
                 {"elapsed_ms", end_ms - start_ms},
                 {"failure_narrative", report.failure_narrative},
                 {"ledger", ledger_to_json(report.ledger)}});

    report.time_breakdown_sec = time_breakdown(events.events());
    report.final_ptt = ptt;

    // persist the run directory
    report.run_dir = config.out_dir / ("run-" + std::to_string(start_ms));
    fs::create_directories(report.run_dir);
    report.event_log_path = report.run_dir / "events.jsonl";
    events.write_jsonl(report.event_log_path);
    {
        std::ofstream out(report.run_dir / "ptt.json", std::ios::binary);
        out << serialize_ptt(ptt);
    }
    write_report_files(report.run_dir, render_report(report.run_dir));
    return report;
}

}  // namespace redloop
