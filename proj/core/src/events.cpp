#include "redloop/events.hpp"

#include <fstream>

#include "redloop/errors.hpp"

namespace redloop {

using nlohmann::json;

void EventLog::emit(const std::string& kind, json payload) {
    Event e;
    e.seq = static_cast<std::int64_t>(events_.size()) + 1;
    e.wall_ms = clock_->now_ms() - start_ms_;
    e.kind = kind;
    e.payload = std::move(payload);
    events_.push_back(std::move(e));
}

void EventLog::write_jsonl(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw CorruptLog("cannot write event log " + file.string());
    for (const Event& e : events_) {
        json j;
        j["seq"] = e.seq;
        j["wall_ms"] = e.wall_ms;
        j["kind"] = e.kind;
        j["payload"] = e.payload;
        out << j.dump() << "\n";
    }
}

std::vector<Event> EventLog::read_jsonl(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CorruptLog("cannot read event log " + file.string());
    std::vector<Event> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CorruptLog(file.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
        Event e;
        try {
            e.seq = j.at("seq").get<std::int64_t>();
            e.wall_ms = j.at("wall_ms").get<std::int64_t>();
            e.kind = j.at("kind").get<std::string>();
            e.payload = j.at("payload");
        } catch (const json::exception& ex) {
            throw CorruptLog(file.string() + " line " + std::to_string(lineno) + ": " + ex.what());
        }
        events.push_back(std::move(e));
    }
    return events;
}

}  // namespace redloop
