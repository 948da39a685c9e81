#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redloop/clock.hpp"

namespace redloop {

/// One line of the run's JSONL event log: {seq, wall_ms, kind, payload}.
/// wall_ms is relative to run start. Kinds: run_started, plan_step,
/// task_selected, command_started, command_finished, classified,
/// tasks_merged, run_finished.
struct Event {
    std::int64_t seq = 0;
    std::int64_t wall_ms = 0;
    std::string kind;
    nlohmann::json payload;
};

class EventLog {
public:
    EventLog(Clock& clock, std::int64_t start_ms) : clock_(&clock), start_ms_(start_ms) {}

    void emit(const std::string& kind, nlohmann::json payload = nlohmann::json::object());

    const std::vector<Event>& events() const { return events_; }

    void write_jsonl(const std::filesystem::path& file) const;
    static std::vector<Event> read_jsonl(const std::filesystem::path& file);

private:
    Clock* clock_;
    std::int64_t start_ms_;
    std::vector<Event> events_;
};

}  // namespace redloop
