#include <doctest.h>

#include "redloop/errors.hpp"
#include "redloop/ptt.hpp"
#include "support/helpers.hpp"

using namespace redloop;

TEST_CASE("sample fixture parses and round-trips byte-stably") {
    const std::string text = testsupport::read_file(testsupport::assets_dir() / "fixtures" /
                                                    "sample_ptt.json");
    const Ptt ptt = parse_ptt(text);
    CHECK(ptt.metadata.rhost == "10.10.10.40");
    CHECK(ptt.metadata.lhost == "10.10.14.22");
    CHECK(ptt.metadata.status == RunStatus::Success);
    CHECK(ptt.root.title == "Reconnaissance");
    CHECK(ptt.root.act_results.size() == 1);
    CHECK(ptt.root.subtasks.size() == 1);

    const std::string first = serialize_ptt(ptt);
    const std::string second = serialize_ptt(parse_ptt(first));
    CHECK(first == second);
}

TEST_CASE("randomized PTTs survive parse-serialize identity") {
    testsupport::PttGenerator gen(42);
    for (int i = 0; i < 100; ++i) {
        const Ptt ptt = gen.next();
        const std::string a = serialize_ptt(ptt);
        const std::string b = serialize_ptt(parse_ptt(a));
        REQUIRE(a == b);
    }
}

TEST_CASE("schema and invariant violations are rejected") {
    const std::string base = testsupport::read_file(testsupport::assets_dir() / "fixtures" /
                                                    "sample_ptt.json");
    auto mutate = [&](const std::string& from, const std::string& to) {
        std::string text = base;
        const auto pos = text.find(from);
        REQUIRE(pos != std::string::npos);
        text.replace(pos, from.size(), to);
        return text;
    };

    CHECK_THROWS_AS(parse_ptt("not json"), SchemaError);
    CHECK_THROWS_AS(parse_ptt(mutate("\"version\": \"2\"", "\"version\": \"3\"")),
                    InvariantError);
    CHECK_THROWS_AS(parse_ptt(mutate("\"id\": \"1.1\"", "\"id\": \"1.7\"")), InvariantError);
    CHECK_THROWS_AS(parse_ptt(mutate("\"LHOST\": \"10.10.14.22\"",
                                     "\"LHOST\": \"10.10.10.40\"")),
                    InvariantError);
    CHECK_THROWS_AS(parse_ptt(mutate("\"finished_at\": \"2025-02-13T22:08:00Z\"",
                                     "\"finished_at\": \"2025-02-13T21:00:00Z\"")),
                    InvariantError);
    CHECK_THROWS_AS(parse_ptt(mutate("\"exit_code\": 0", "\"exit_code\": -1")),
                    InvariantError);  // -1 is reserved for TIMEOUT
    CHECK_THROWS_AS(parse_ptt(mutate("\"status\": \"completed\"",
                                     "\"status\": \"half-done\"")),
                    InvariantError);
}

TEST_CASE("timeout results must pair exit_code -1 with TIMEOUT") {
    Ptt ptt;
    ptt.metadata.started_at = "2025-02-13T22:01:52Z";
    ptt.metadata.lhost = "10.10.14.22";
    ptt.metadata.rhost = "10.10.10.4";
    ptt.metadata.target_description = "t";
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";

    ActResult timeout;
    timeout.command = "nmap";
    timeout.exit_code = -1;
    timeout.exit_class = ExitClass::Timeout;
    timeout.log_summary = "";
    ptt.root.act_results.push_back(timeout);
    const Ptt round = parse_ptt(serialize_ptt(ptt));
    CHECK(round.root.act_results[0].exit_class == ExitClass::Timeout);
}

TEST_CASE("in_progress is a leaf-only status") {
    std::string text = testsupport::read_file(testsupport::assets_dir() / "fixtures" /
                                              "sample_ptt.json");
    // force the non-leaf root in_progress
    const std::string from = "\"title\": \"Reconnaissance\",";
    text.replace(text.find(from), from.size(), from + "\n    \"status\": \"in_progress\",");
    CHECK_THROWS_AS(parse_ptt(text), InvariantError);
}

TEST_CASE("merge_new_tasks appends contiguous pending children") {
    Ptt ptt;
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";
    const auto added = merge_new_tasks(ptt, TaskId::root(),
                                       {{"a", "da", ""}, {"b", "db", ""}});
    REQUIRE(added.size() == 2);
    CHECK(added[0].str() == "1.1");
    CHECK(added[1].str() == "1.2");
    CHECK(ptt.find(added[1])->status == TaskStatus::Pending);
    CHECK_THROWS_AS(merge_new_tasks(ptt, TaskId::parse("1.9"), {{"x", "y", ""}}),
                    UnknownParent);
}

TEST_CASE("status transition guards") {
    Ptt ptt;
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";
    merge_new_tasks(ptt, TaskId::root(), {{"a", "", ""}});
    const TaskId id = TaskId::parse("1.1");

    ActResult r;
    r.command = "x";
    r.exit_class = ExitClass::Others;
    r.log_summary = "ran";

    CHECK_THROWS_AS(record_act_result(ptt, id, r, RecordDisposition::Continue), NotInProgress);
    CHECK_THROWS_AS(mark_in_progress(ptt, TaskId::root()), NotALeaf);

    mark_in_progress(ptt, id);
    CHECK_THROWS_AS(mark_in_progress(ptt, id), InvariantError);  // not pending anymore

    record_act_result(ptt, id, r, RecordDisposition::Continue);
    record_act_result(ptt, id, r, RecordDisposition::Continue);
    record_act_result(ptt, id, r, RecordDisposition::Exhausted);
    CHECK(ptt.find(id)->status == TaskStatus::Failed);
    CHECK_THROWS_AS(record_act_result(ptt, id, r, RecordDisposition::Continue), NotInProgress);
}

TEST_CASE("act result cap is enforced at three") {
    Ptt ptt;
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";
    merge_new_tasks(ptt, TaskId::root(), {{"a", "", ""}});
    const TaskId id = TaskId::parse("1.1");
    mark_in_progress(ptt, id);
    ActResult r;
    r.command = "x";
    r.log_summary = "ran";
    for (int i = 0; i < 3; ++i) record_act_result(ptt, id, r, RecordDisposition::Continue);
    CHECK_THROWS_AS(record_act_result(ptt, id, r, RecordDisposition::Continue), InvariantError);
}

TEST_CASE("runnable_leaves returns pending leaves in DFS order") {
    Ptt ptt;
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";
    merge_new_tasks(ptt, TaskId::root(), {{"a", "", ""}, {"b", "", ""}});
    merge_new_tasks(ptt, TaskId::parse("1.1"), {{"a1", "", ""}});
    ptt.find(TaskId::parse("1.1.1"))->status = TaskStatus::Completed;
    const auto leaves = runnable_leaves(ptt);
    REQUIRE(leaves.size() == 1);
    CHECK(leaves[0]->id.str() == "1.2");
}

TEST_CASE("last_executed_task follows exec_seq wall order") {
    Ptt ptt;
    ptt.root.id = TaskId::root();
    ptt.root.title = "root";
    merge_new_tasks(ptt, TaskId::root(), {{"a", "", ""}, {"b", "", ""}});
    CHECK(last_executed_task(ptt) == nullptr);
    ActResult r;
    r.command = "x";
    r.log_summary = "ran";
    mark_in_progress(ptt, TaskId::parse("1.2"));
    record_act_result(ptt, TaskId::parse("1.2"), r, RecordDisposition::Conclude);
    mark_in_progress(ptt, TaskId::parse("1.1"));
    record_act_result(ptt, TaskId::parse("1.1"), r, RecordDisposition::Conclude);
    CHECK(last_executed_task(ptt)->id.str() == "1.1");
}

TEST_CASE("task id parsing") {
    CHECK(TaskId::parse("1.3.1.4").str() == "1.3.1.4");
    CHECK(TaskId::parse("1.2").parent().str() == "1");
    CHECK_THROWS_AS(TaskId::parse(""), InvariantError);
    CHECK_THROWS_AS(TaskId::parse("1..2"), InvariantError);
    CHECK_THROWS_AS(TaskId::parse("1.0"), InvariantError);
    CHECK_THROWS_AS(TaskId::parse("a.b"), InvariantError);
    CHECK_THROWS_AS(TaskId::root().parent(), InvariantError);
}

TEST_CASE("is_ipv4") {
    CHECK(is_ipv4("10.10.10.4"));
    CHECK(is_ipv4("0.0.0.0"));
    CHECK_FALSE(is_ipv4("10.10.10"));
    CHECK_FALSE(is_ipv4("10.10.10.256"));
    CHECK_FALSE(is_ipv4("10.10.10.4.5"));
    CHECK_FALSE(is_ipv4("ten.ten.ten.four"));
}
