#include "redloop/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "redloop/errors.hpp"
#include "redloop/events.hpp"
#include "redloop/llm.hpp"
#include "redloop/orchestrator.hpp"
#include "redloop/ptt.hpp"

namespace redloop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CorruptLog("cannot open " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fixed(double value, int places) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(places) << value;
    return out.str();
}

void render_tree(const TaskNode& node, const std::string& prefix, bool last, bool root,
                 std::string& out) {
    if (root) {
        out += node.id.str() + " " + node.title + " [" + to_string(node.status) + "]\n";
    } else {
        out += prefix + (last ? "`-- " : "|-- ") + node.id.str() + " " + node.title + " [" +
               to_string(node.status) + "]\n";
    }
    const std::string child_prefix = root ? "" : prefix + (last ? "    " : "|   ");
    for (std::size_t i = 0; i < node.subtasks.size(); ++i) {
        render_tree(node.subtasks[i], child_prefix, i + 1 == node.subtasks.size(), false, out);
    }
}

}  // namespace

ReportDocument render_report(const fs::path& run_dir) {
    const std::vector<Event> events = EventLog::read_jsonl(run_dir / "events.jsonl");
    const Ptt ptt = parse_ptt(read_file(run_dir / "ptt.json"));

    if (events.empty() || events.back().kind != "run_finished") {
        throw CorruptLog("event log does not end with run_finished");
    }
    const json& fin = events.back().payload;
    const std::string outcome = fin.at("outcome").get<std::string>();
    const int steps = fin.at("steps").get<int>();
    const std::int64_t elapsed_ms = fin.at("elapsed_ms").get<std::int64_t>();
    const std::string narrative = fin.value("failure_narrative", "");
    std::optional<std::string> shell_command;
    if (fin.contains("shell_command") && fin["shell_command"].is_string()) {
        shell_command = fin["shell_command"].get<std::string>();
    }
    const json& ledger = fin.at("ledger");

    const std::map<std::string, double> breakdown = time_breakdown(events);

    // fold the per-role cost ledger into the module buckets
    std::map<std::string, double> module_dollars;
    std::map<std::string, std::int64_t> module_tokens;
    for (const std::string& bucket : module_buckets()) {
        module_dollars[bucket] = 0.0;
        module_tokens[bucket] = 0;
    }
    double total_dollars = 0.0;
    std::int64_t total_calls = 0;
    for (const auto& [role, stats] : ledger.at("per_role").items()) {
        const std::string bucket = role_module(llm_role_from_string(role));
        module_dollars[bucket] += stats.at("dollars").get<double>();
        module_tokens[bucket] += stats.at("tokens_in").get<std::int64_t>() +
                                 stats.at("tokens_out").get<std::int64_t>();
        total_dollars += stats.at("dollars").get<double>();
        total_calls += stats.at("calls").get<std::int64_t>();
    }

    double total_seconds = 0.0;
    for (const auto& [bucket, sec] : breakdown) total_seconds += sec;

    std::string md;
    md += "# Run Report\n\n";
    md += "- Outcome: **" + outcome + "**\n";
    md += "- Target: " + ptt.metadata.rhost + " (" + ptt.metadata.target_description + ")\n";
    md += "- Attacker: " + ptt.metadata.lhost + "\n";
    md += "- Started: " + ptt.metadata.started_at + "\n";
    if (ptt.metadata.finished_at) md += "- Finished: " + *ptt.metadata.finished_at + "\n";
    md += "- Elapsed: " + fixed(static_cast<double>(elapsed_ms) / 1000.0, 3) + " s over " +
          std::to_string(steps) + " planning step(s)\n";
    md += "- Tasks in tree: " + std::to_string(node_count(ptt)) + "\n";
    if (shell_command) {
        md += "\n## Shell obtained\n\n```\n" + *shell_command + "\n```\n";
    } else if (!narrative.empty()) {
        md += "\n## Why the run ended\n\n" + narrative + "\n";
    }

    md += "\n## Task tree\n\n```\n";
    render_tree(ptt.root, "", true, true, md);
    md += "```\n";

    md += "\n## Time breakdown\n\n";
    md += "| Module | Seconds | Share |\n|---|---:|---:|\n";
    for (const std::string& bucket : module_buckets()) {
        const double sec = breakdown.at(bucket);
        const double share = total_seconds > 0 ? sec / total_seconds * 100.0 : 0.0;
        md += "| " + bucket + " | " + fixed(sec, 3) + " | " + fixed(share, 1) + "% |\n";
    }
    md += "| **Total** | " + fixed(total_seconds, 3) + " | 100.0% |\n";

    md += "\n## Model cost\n\n";
    md += "| Role | Calls | Tokens in | Tokens out | Dollars |\n|---|---:|---:|---:|---:|\n";
    for (const auto& [role, stats] : ledger.at("per_role").items()) {
        md += "| " + role + " | " + std::to_string(stats.at("calls").get<std::int64_t>()) +
              " | " + std::to_string(stats.at("tokens_in").get<std::int64_t>()) + " | " +
              std::to_string(stats.at("tokens_out").get<std::int64_t>()) + " | " +
              fixed(stats.at("dollars").get<double>(), 6) + " |\n";
    }
    md += "| **Total** | " + std::to_string(total_calls) + " | | | " +
          fixed(total_dollars, 6) + " |\n";

    // executed commands, in wall order, straight from the event log
    md += "\n## Commands\n\n";
    bool any_command = false;
    for (const Event& e : events) {
        if (e.kind != "command_finished") continue;
        any_command = true;
        md += "- `" + e.payload.value("command", std::string{}) +
              "` (exit " + std::to_string(e.payload.value("exit_code", 0)) + ", " +
              fixed(e.payload.value("duration_ms", static_cast<std::int64_t>(0)) / 1000.0, 3) +
              " s)\n";
    }
    if (!any_command) md += "(none executed)\n";

    json breakdown_json = json::object();
    for (const std::string& bucket : module_buckets()) {
        breakdown_json[bucket] = breakdown.at(bucket);
    }

    ReportDocument doc;
    doc.markdown = std::move(md);
    doc.json_twin = json{{"outcome", outcome},
                         {"rhost", ptt.metadata.rhost},
                         {"lhost", ptt.metadata.lhost},
                         {"started_at", ptt.metadata.started_at},
                         {"finished_at", ptt.metadata.finished_at
                                             ? json(*ptt.metadata.finished_at)
                                             : json(nullptr)},
                         {"elapsed_sec", static_cast<double>(elapsed_ms) / 1000.0},
                         {"steps", steps},
                         {"node_count", node_count(ptt)},
                         {"shell_command", shell_command ? json(*shell_command) : json(nullptr)},
                         {"failure_narrative", narrative},
                         {"time_breakdown_sec", breakdown_json},
                         {"ledger", ledger},
                         {"total_dollars", total_dollars}};

    std::string csv = "module,seconds,dollars\n";
    for (const std::string& bucket : module_buckets()) {
        csv += bucket + "," + fixed(breakdown.at(bucket), 3) + "," +
               fixed(module_dollars.at(bucket), 6) + "\n";
    }
    doc.ledger_csv = std::move(csv);
    return doc;
}

void write_report_files(const fs::path& run_dir, const ReportDocument& doc) {
    {
        std::ofstream out(run_dir / "report.md", std::ios::binary);
        out << doc.markdown;
    }
    {
        std::ofstream out(run_dir / "report.json", std::ios::binary);
        out << doc.json_twin.dump(2) << "\n";
    }
    {
        std::ofstream out(run_dir / "ledger.csv", std::ios::binary);
        out << doc.ledger_csv;
    }
}

}  // namespace redloop
