#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "redloop/clock.hpp"
#include "redloop/ptt.hpp"
#include "redloop/rag.hpp"
#include "redloop/simlab.hpp"

using namespace redloop;

namespace {

std::filesystem::path assets_dir() { return std::filesystem::path(REDLOOP_ASSETS_DIR); }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string& blue_json() {
    static const std::string text =
        read_file(assets_dir() / "corpora" / "success_cases" / "htb_blue.json");
    return text;
}

void bm_ptt_parse(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_ptt(blue_json()));
    }
}
BENCHMARK(bm_ptt_parse);

void bm_ptt_serialize(benchmark::State& state) {
    const Ptt ptt = parse_ptt(blue_json());
    for (auto _ : state) {
        benchmark::DoNotOptimize(serialize_ptt(ptt));
    }
}
BENCHMARK(bm_ptt_serialize);

void bm_rag_query(benchmark::State& state) {
    RagStore store;
    store.ingest(assets_dir() / "corpora" / "success_cases", Corpus::SuccessCases);
    store.ingest(assets_dir() / "corpora" / "techniques", Corpus::Techniques);
    for (auto _ : state) {
        benchmark::DoNotOptimize(store.query(
            Corpus::SuccessCases, "Metasploit SMB exploit port 445 empty credentials", 5));
    }
}
BENCHMARK(bm_rag_query);

void bm_sim_execute(benchmark::State& state) {
    VirtualClock clock;
    SimExecutor executor(
        load_scenario(assets_dir() / "scenarios" / "legacy_like.scenario.json"), clock);
    CommandSpec spec;
    spec.command = "nmap -p- 10.10.10.4";
    for (auto _ : state) {
        benchmark::DoNotOptimize(executor.execute(spec));
    }
}
BENCHMARK(bm_sim_execute);

}  // namespace

BENCHMARK_MAIN();
