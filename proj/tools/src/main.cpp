#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "redloop/config.hpp"
#include "redloop/errors.hpp"
#include "redloop/orchestrator.hpp"
#include "redloop/rag.hpp"
#include "redloop/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 2;
constexpr int kExitAborted = 3;
constexpr int kExitUsage = 64;

int outcome_exit_code(redloop::RunStatus outcome) {
    switch (outcome) {
        case redloop::RunStatus::Success: return kExitSuccess;
        case redloop::RunStatus::Failure: return kExitFailure;
        default: return kExitAborted;
    }
}

int cmd_run(const redloop::RunConfig& config) {
    const redloop::RunReport report = redloop::run(config);
    std::cout << "outcome: " << redloop::to_string(report.outcome) << "\n";
    if (report.shell_command) {
        std::cout << "shell via: " << *report.shell_command << "\n";
    }
    if (!report.failure_narrative.empty()) {
        std::cout << report.failure_narrative << "\n";
    }
    std::cout << "steps: " << report.steps << "  elapsed: " << report.elapsed_sec << " s\n";
    std::cout << "run dir: " << report.run_dir.string() << "\n";
    return outcome_exit_code(report.outcome);
}

int cmd_ingest(const fs::path& dir, const std::string& corpus_name, const fs::path& index) {
    redloop::RagStore store;
    if (fs::exists(index)) store = redloop::RagStore::load(index);
    const redloop::Corpus corpus = corpus_name == "techniques"
                                       ? redloop::Corpus::Techniques
                                       : redloop::Corpus::SuccessCases;
    const redloop::IngestSummary summary = store.ingest(dir, corpus);
    store.save(index);
    std::cout << "docs_added=" << summary.docs_added << " docs_total=" << summary.docs_total
              << " index=" << index.string() << "\n";
    for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_report(const fs::path& run_dir, bool write_back) {
    const redloop::ReportDocument doc = redloop::render_report(run_dir);
    if (write_back) {
        redloop::write_report_files(run_dir, doc);
        std::cout << "wrote report.md, report.json, ledger.csv under " << run_dir.string()
                  << "\n";
    } else {
        std::cout << doc.markdown;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"autonomous IP-to-shell run orchestrator"};
    app.require_subcommand(1);

    // run
    redloop::RunConfig config;
    std::string executor_name = "sim";
    std::string model_name = "scripted";
    std::string scenario, transcripts, corpora, index, prompts, settings_file, working_dir;
    bool no_success_cases = false;

    CLI::App* run = app.add_subcommand("run", "drive the plan/act loop against a target");
    run->add_option("--target", config.rhost, "target IPv4 (RHOST)")->required();
    run->add_option("--lhost", config.lhost, "attacker IPv4 (LHOST)");
    run->add_option("--target-description", config.target_description,
                    "free-text target description");
    run->add_option("--sim", scenario, "scenario file; selects the simulated executor");
    run->add_flag("--allow-real-exec", config.allow_real_exec,
                  "run generated commands through the real shell");
    run->add_option("--target-cidr", config.target_cidr,
                    "authorization scope for real execution");
    run->add_option("--model", model_name, "model backend: scripted|remote")
        ->check(CLI::IsMember({"scripted", "remote"}));
    run->add_option("--transcripts", transcripts, "scripted model transcript (JSONL)");
    run->add_flag("--allow-remote-with-sim", config.allow_remote_with_sim,
                  "permit the remote model against a simulated target");
    run->add_flag("--no-success-cases", no_success_cases,
                  "disable success-case retrieval and analysis");
    run->add_flag("--lenient-prioritizer", config.lenient_prioritizer,
                  "fall back to the first runnable task on a bad selection");
    run->add_option("--max-steps", config.max_steps, "planning step budget");
    run->add_option("--max-wall-secs", config.max_wall_sec, "wall-clock budget in seconds");
    run->add_option("--corpora", corpora, "directory with techniques/ and success_cases/");
    run->add_option("--index", index, "pre-built retrieval index file");
    run->add_option("--prompts", prompts, "prompt template directory");
    run->add_option("--settings", settings_file, "pricing / remote endpoint settings file");
    run->add_option("--out", config.out_dir, "parent directory for run artifacts");
    run->add_option("--working-dir", working_dir, "working directory for real execution");

    // ingest
    fs::path ingest_dir;
    std::string corpus_name;
    fs::path ingest_index = "rag.index";
    CLI::App* ingest = app.add_subcommand("ingest", "add documents to the retrieval index");
    ingest->add_option("dir", ingest_dir, "directory to scan")->required();
    ingest->add_option("--corpus", corpus_name, "techniques|success_cases")
        ->required()
        ->check(CLI::IsMember({"techniques", "success_cases"}));
    ingest->add_option("--index", ingest_index, "index file to create or extend");

    // report / replay
    fs::path report_dir;
    CLI::App* report = app.add_subcommand("report", "print a run's report to stdout");
    report->add_option("run_dir", report_dir, "run directory")->required();

    fs::path replay_dir;
    CLI::App* replay = app.add_subcommand("replay",
                                          "regenerate a run's report files in place");
    replay->add_option("run_dir", replay_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run) {
            if (!scenario.empty()) {
                config.executor = redloop::ExecutorBackend::Sim;
                config.scenario_path = scenario;
            } else {
                config.executor = redloop::ExecutorBackend::Real;
            }
            config.model = model_name == "remote" ? redloop::ModelBackend::Remote
                                                  : redloop::ModelBackend::Scripted;
            config.success_cases_enabled = !no_success_cases;
            config.transcripts_path = transcripts;
            config.corpora_dir = corpora;
            config.index_file = index;
            config.prompts_dir = prompts;
            config.working_dir = working_dir;
            if (!settings_file.empty()) {
                const redloop::Settings settings = redloop::load_settings(settings_file);
                config.prices = settings.prices;
                config.remote = settings.remote;
            }
            return cmd_run(config);
        }
        if (*ingest) return cmd_ingest(ingest_dir, corpus_name, ingest_index);
        if (*report) return cmd_report(report_dir, /*write_back=*/false);
        if (*replay) return cmd_report(replay_dir, /*write_back=*/true);
    } catch (const redloop::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const redloop::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return *ingest ? 1 : kExitAborted;
    }
    return kExitUsage;
}
