#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "support/helpers.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() { return std::string(REDLOOP_CLI_PATH); }

int run_cli(const std::string& args, const fs::path& capture) {
    const std::string cmd = cli() + " " + args + " > " + capture.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    return WEXITSTATUS(raw);
}

std::string common_run_args(const fs::path& out_dir, const std::string& transcript) {
    return "run --target 10.10.10.4 --sim " +
           (testsupport::assets_dir() / "scenarios" / "legacy_like.scenario.json").string() +
           " --transcripts " + (testsupport::assets_dir() / "transcripts" / transcript).string() +
           " --corpora " + (testsupport::assets_dir() / "corpora").string() + " --out " +
           out_dir.string();
}

}  // namespace

TEST_CASE("run exits 0 on SUCCESS and writes the run directory") {
    const fs::path dir = testsupport::fresh_dir("cli-success");
    const int rc = run_cli(common_run_args(dir, "with_success_cases.jsonl"), dir / "out.txt");
    CHECK(rc == 0);
    const std::string output = testsupport::read_file(dir / "out.txt");
    CHECK(output.find("SUCCESS") != std::string::npos);

    // exactly one run directory with the full artifact set
    int run_dirs = 0;
    fs::path run_dir;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            ++run_dirs;
            run_dir = entry.path();
        }
    }
    REQUIRE(run_dirs == 1);
    for (const char* name : {"events.jsonl", "ptt.json", "report.md", "report.json",
                             "ledger.csv"}) {
        CHECK(fs::exists(run_dir / name));
    }

    SUBCASE("report prints and replay rewrites byte-identically") {
        const std::string before = testsupport::read_file(run_dir / "report.md");
        CHECK(run_cli("report " + run_dir.string(), dir / "report.txt") == 0);
        CHECK(testsupport::read_file(dir / "report.txt").find("SUCCESS") != std::string::npos);
        CHECK(run_cli("replay " + run_dir.string(), dir / "replay.txt") == 0);
        CHECK(testsupport::read_file(run_dir / "report.md") == before);
    }
}

TEST_CASE("run exits 2 on FAILURE") {
    const fs::path dir = testsupport::fresh_dir("cli-failure");
    const int rc = run_cli(common_run_args(dir, "without_success_cases.jsonl") +
                               " --no-success-cases --max-steps 4",
                           dir / "out.txt");
    CHECK(rc == 2);
}

TEST_CASE("run exits 3 on ABORTED") {
    const fs::path dir = testsupport::fresh_dir("cli-aborted");
    const int rc = run_cli(common_run_args(dir, "nonleaf_prioritizer.jsonl"), dir / "out.txt");
    CHECK(rc == 3);
    CHECK(testsupport::read_file(dir / "out.txt").find("not a runnable leaf") !=
          std::string::npos);
}

TEST_CASE("usage and configuration errors exit 64") {
    const fs::path dir = testsupport::fresh_dir("cli-usage");
    CHECK(run_cli("run", dir / "a.txt") == 64);                      // --target is required
    CHECK(run_cli("frobnicate", dir / "b.txt") == 64);               // unknown subcommand
    CHECK(run_cli(common_run_args(dir, "with_success_cases.jsonl") +
                      " --lhost 10.10.10.4",
                  dir / "c.txt") == 64);                             // LHOST == RHOST
    CHECK(run_cli("--help", dir / "d.txt") == 0);
}

TEST_CASE("ingest builds an index the run can consume") {
    const fs::path dir = testsupport::fresh_dir("cli-ingest");
    const fs::path index = dir / "rag.index";

    CHECK(run_cli("ingest " +
                      (testsupport::assets_dir() / "corpora" / "techniques").string() +
                      " --corpus techniques --index " + index.string(),
                  dir / "a.txt") == 0);
    CHECK(run_cli("ingest " +
                      (testsupport::assets_dir() / "corpora" / "success_cases").string() +
                      " --corpus success_cases --index " + index.string(),
                  dir / "b.txt") == 0);
    CHECK(testsupport::read_file(dir / "b.txt").find("docs_added") != std::string::npos);
    REQUIRE(fs::exists(index));

    const fs::path out = testsupport::fresh_dir("cli-ingest-run");
    const int rc = run_cli(
        "run --target 10.10.10.4 --sim " +
            (testsupport::assets_dir() / "scenarios" / "legacy_like.scenario.json").string() +
            " --transcripts " +
            (testsupport::assets_dir() / "transcripts" / "with_success_cases.jsonl").string() +
            " --index " + index.string() + " --out " + out.string(),
        dir / "c.txt");
    CHECK(rc == 0);

    CHECK(run_cli("ingest /nonexistent --corpus techniques --index " + index.string(),
                  dir / "d.txt") == 1);
}
