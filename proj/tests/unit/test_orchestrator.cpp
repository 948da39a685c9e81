#include <doctest.h>

#include <cmath>
#include <numeric>

#include "redloop/errors.hpp"
#include "redloop/orchestrator.hpp"
#include "redloop/report.hpp"
#include "support/helpers.hpp"

using namespace redloop;
using nlohmann::json;

namespace {

RunConfig base_config(const std::string& tag) {
    RunConfig config;
    config.rhost = "10.10.10.4";
    config.scenario_path = testsupport::assets_dir() / "scenarios" /
                           "legacy_like.scenario.json";
    config.transcripts_path = testsupport::assets_dir() / "transcripts" /
                              "with_success_cases.jsonl";
    config.corpora_dir = testsupport::assets_dir() / "corpora";
    config.out_dir = testsupport::fresh_dir(tag);
    return config;
}

Event ev(std::int64_t seq, std::int64_t wall_ms, const std::string& kind,
         json payload = json::object()) {
    return Event{seq, wall_ms, kind, std::move(payload)};
}

}  // namespace

TEST_CASE("cidr_contains") {
    CHECK(cidr_contains("10.10.10.0/24", "10.10.10.4"));
    CHECK(cidr_contains("10.10.10.4/32", "10.10.10.4"));
    CHECK(cidr_contains("0.0.0.0/0", "203.0.113.9"));
    CHECK_FALSE(cidr_contains("10.10.10.0/24", "10.10.11.4"));
    CHECK_FALSE(cidr_contains("10.10.10.4/32", "10.10.10.5"));
    CHECK_FALSE(cidr_contains("10.10.10.0/24", "not-an-ip"));
    CHECK_FALSE(cidr_contains("nonsense", "10.10.10.4"));
}

TEST_CASE("configuration validation fails before the loop") {
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val1");
            c.rhost = "not-an-ip";
            run(c);
        }(),
        ConfigError);
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val2");
            c.lhost = c.rhost;  // attacker and target must differ
            run(c);
        }(),
        ConfigError);
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val3");
            c.scenario_path = "/nonexistent.scenario.json";
            run(c);
        }(),
        ConfigError);
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val4");
            c.executor = ExecutorBackend::Real;  // no allow_real_exec
            run(c);
        }(),
        ConfigError);
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val5");
            c.executor = ExecutorBackend::Real;
            c.allow_real_exec = true;
            c.target_cidr = "192.168.0.0/16";  // does not contain the target
            run(c);
        }(),
        ConfigError);
    CHECK_THROWS_AS(
        [] {
            RunConfig c = base_config("val6");
            c.model = ModelBackend::Remote;  // sim + remote needs the explicit opt-in
            run(c);
        }(),
        ConfigError);
}

TEST_CASE("time_breakdown attributes every interval to one bucket") {
    std::vector<Event> events;
    events.push_back(ev(1, 0, "run_started"));
    events.push_back(ev(2, 1000, "plan_step", {{"l2_ms", 400}}));
    events.push_back(ev(3, 1200, "task_selected"));
    events.push_back(ev(4, 1500, "command_started"));
    events.push_back(ev(5, 1900, "command_finished"));
    events.push_back(ev(6, 2000, "classified"));
    events.push_back(ev(7, 2100, "run_finished"));

    const auto breakdown = time_breakdown(events);
    CHECK(breakdown.at("RePlanner") == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(breakdown.at("ReL2SuccessCases") == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(breakdown.at("RePrioritizer") == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(breakdown.at("ActCommandGen") == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(breakdown.at("ActExecution") == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(breakdown.at("ActLogAnalysis") == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(breakdown.at("Overhead") == doctest::Approx(0.1).epsilon(1e-12));
    const double total = std::accumulate(breakdown.begin(), breakdown.end(), 0.0,
                                         [](double acc, const auto& kv) {
                                             return acc + kv.second;
                                         });
    CHECK(total == doctest::Approx(2.1).epsilon(1e-12));

    SUBCASE("backwards timestamps are corrupt") {
        std::vector<Event> bad = events;
        bad[3].wall_ms = 100;
        CHECK_THROWS_AS(time_breakdown(bad), CorruptLog);
    }
    SUBCASE("unknown kinds are corrupt") {
        std::vector<Event> bad = events;
        bad[3].kind = "mystery_event";
        CHECK_THROWS_AS(time_breakdown(bad), CorruptLog);
    }
}

TEST_CASE("success run produces a complete, conserving run directory") {
    const RunConfig config = base_config("success");
    const RunReport report = run(config);

    CHECK(report.outcome == RunStatus::Success);
    REQUIRE(report.shell_command.has_value());
    CHECK(report.shell_command->find("ms17_010") != std::string::npos);
    CHECK(report.steps <= 6);
    CHECK(report.failure_narrative.empty());
    CHECK(report.final_ptt.metadata.status == RunStatus::Success);

    // accounting conservation: buckets sum exactly to elapsed (virtual clock)
    double total = 0.0;
    for (const auto& [bucket, sec] : report.time_breakdown_sec) total += sec;
    CHECK(total == doctest::Approx(report.elapsed_sec).epsilon(1e-12));

    // dollar conservation: per-role ledger sums to the gateway total
    double dollars = 0.0;
    for (const auto& [role, stats] : report.ledger.per_role) dollars += stats.dollars;
    CHECK(std::abs(dollars - report.ledger.total.dollars) < 1e-9);

    for (const char* name : {"events.jsonl", "ptt.json", "report.md", "report.json",
                             "ledger.csv"}) {
        CHECK(std::filesystem::exists(report.run_dir / name));
    }
    // the persisted PTT round-trips through the parser
    const Ptt persisted = parse_ptt(testsupport::read_file(report.run_dir / "ptt.json"));
    CHECK(persisted.metadata.status == RunStatus::Success);
}

TEST_CASE("identical configurations replay to identical event logs") {
    RunConfig a = base_config("repro-a");
    RunConfig b = base_config("repro-b");
    const RunReport ra = run(a);
    const RunReport rb = run(b);
    CHECK(testsupport::read_file(ra.event_log_path) ==
          testsupport::read_file(rb.event_log_path));
    CHECK(testsupport::read_file(ra.run_dir / "ptt.json") ==
          testsupport::read_file(rb.run_dir / "ptt.json"));
}

TEST_CASE("report rendering is a pure function of the run directory") {
    const RunReport report = run(base_config("report"));
    const ReportDocument first = render_report(report.run_dir);
    const ReportDocument second = render_report(report.run_dir);
    CHECK(first.markdown == second.markdown);
    CHECK(first.json_twin == second.json_twin);
    CHECK(first.ledger_csv == second.ledger_csv);
    // the files written during the run are exactly what a replay would write
    CHECK(testsupport::read_file(report.run_dir / "report.md") == first.markdown);
    CHECK(testsupport::read_file(report.run_dir / "ledger.csv") == first.ledger_csv);
    CHECK(first.markdown.find("SUCCESS") != std::string::npos);
    CHECK(first.json_twin.at("outcome") == "SUCCESS");

    CHECK_THROWS_AS(render_report(testsupport::fresh_dir("empty-run")), CorruptLog);
}

TEST_CASE("non-leaf prioritizer selection aborts; lenient mode recovers") {
    RunConfig config = base_config("nonleaf");
    config.transcripts_path = testsupport::assets_dir() / "transcripts" /
                              "nonleaf_prioritizer.jsonl";
    const RunReport aborted = run(config);
    CHECK(aborted.outcome == RunStatus::Aborted);
    CHECK(aborted.failure_narrative.find("not a runnable leaf") != std::string::npos);

    config.out_dir = testsupport::fresh_dir("nonleaf-lenient");
    config.lenient_prioritizer = true;
    const RunReport recovered = run(config);
    CHECK(recovered.outcome == RunStatus::Success);
}

TEST_CASE("wall budget aborts inside the tolerance window") {
    RunConfig config = base_config("wall");
    config.scenario_path = testsupport::assets_dir() / "scenarios" /
                           "slow_target.scenario.json";
    config.transcripts_path = testsupport::assets_dir() / "transcripts" /
                              "wall_budget.jsonl";
    config.rhost = "10.10.10.9";
    config.max_wall_sec = 5;
    const RunReport report = run(config);
    CHECK(report.outcome == RunStatus::Aborted);
    CHECK(report.elapsed_sec >= 5.0);
    CHECK(report.elapsed_sec <= 5.5);
    CHECK_FALSE(report.failure_narrative.empty());
}

TEST_CASE("injected delays reappear in the per-module breakdown") {
    RunConfig config = base_config("delays");
    config.transcripts_path = testsupport::assets_dir() / "transcripts" /
                              "delay_injection.jsonl";
    const RunReport report = run(config);
    REQUIRE(report.outcome == RunStatus::Success);
    const auto& breakdown = report.time_breakdown_sec;
    // transcript injects 1000ms planning, 500ms commandgen, 250ms summarize;
    // the scenario charges 400ms to the exploit execution
    CHECK(std::abs(breakdown.at("RePlanner") - 1.000) <= 0.010);
    CHECK(std::abs(breakdown.at("ActCommandGen") - 0.500) <= 0.010);
    CHECK(std::abs(breakdown.at("ActExecution") - 0.400) <= 0.010);
    CHECK(std::abs(breakdown.at("ActLogAnalysis") - 0.250) <= 0.010);
}

TEST_CASE("step budget exhaustion is a FAILURE, not a crash") {
    RunConfig config = base_config("steps");
    config.transcripts_path = testsupport::assets_dir() / "transcripts" /
                              "without_success_cases.jsonl";
    config.success_cases_enabled = false;
    config.max_steps = 4;
    const RunReport report = run(config);
    CHECK(report.outcome == RunStatus::Failure);
    CHECK(report.steps == 4);
    CHECK_FALSE(report.failure_narrative.empty());
}
