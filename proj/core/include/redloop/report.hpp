#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace redloop {

/// Markdown report plus a JSON twin carrying every number the markdown
/// prints, and CSV chart data (module, seconds, dollars). Rendering is a
/// pure function of the run directory, so regeneration is byte-identical.
struct ReportDocument {
    std::string markdown;
    nlohmann::json json_twin;
    std::string ledger_csv;
};

/// Renders from runs/<id>/{events.jsonl, ptt.json}. Throws CorruptLog.
ReportDocument render_report(const std::filesystem::path& run_dir);

/// Writes report.md, report.json and ledger.csv into the run directory.
void write_report_files(const std::filesystem::path& run_dir, const ReportDocument& doc);

}  // namespace redloop
