#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "support/mock_llm.hpp"
#include "tripweaver/metrics.hpp"
#include "tripweaver/runner.hpp"
#include "tripweaver/scenario.hpp"

using namespace tripweaver;
using tripweaver::testing::MockLlmServer;

namespace {

const char* kScenarioPath = TRIPWEAVER_SOURCE_DIR "/scenarios/paper_scenario.json";

// Three households over three days: a plain one plus the two trait-driven
// ones, with every stage served over HTTP.
SimulationConfig contract_config() {
    SimulationConfig cfg = load_scenario(kScenarioPath);
    std::vector<HouseholdProfile> picked = {cfg.agents[0], cfg.agents[8], cfg.agents[9]};
    cfg.agents = picked;
    cfg.days = 3;
    for (Stage stage : all_stages()) cfg.stage_cores[stage] = CoreId::llm;
    return cfg;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json doc;
    in >> doc;
    return doc;
}

struct ServerEnv {
    MockLlmServer server;
    explicit ServerEnv(SimulationConfig cfg) : server(std::move(cfg)) {
        const std::string base = server.start();
        setenv("LLM_BASE_URL", base.c_str(), 1);
    }
};

int count_tagged(const std::vector<std::string>& tags, const std::string& needle) {
    int n = 0;
    for (const auto& tag : tags) {
        if (tag.find(needle) != std::string::npos) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("a full llm-backed run completes cleanly over http") {
    auto cfg = contract_config();
    ServerEnv env(cfg);
    const auto out = fresh_dir("tripweaver_contract_clean");

    auto run = run_simulation(cfg, out);

    REQUIRE(run.days.size() == 3);
    for (const auto& day : run.days) {
        REQUIRE(day.logs.size() == 3);
        for (const auto& log : day.logs) {
            CHECK(log.failed_stage.empty());
            CHECK(log.formatted_count == log.declared_count);
            CHECK(log.formatted_count >= 4);  // both mandatory round trips
            REQUIRE(log.stage_runs.size() >= 4);
            for (const auto& stage_run : log.stage_runs) {
                CHECK(stage_run.trace.ok);
                CHECK(stage_run.trace.attempts == 1);
            }
        }
    }

    // Five stages per (agent, day) round-trip: activities, tours, trips,
    // format, reflect. Nothing needed a retry, so exactly one call each.
    CHECK(env.server.total_calls() == 45);
    CHECK(env.server.calls_for_stage(Stage::activities) == 9);
    CHECK(env.server.calls_for_stage(Stage::trips) == 9);
    CHECK(env.server.calls_for_stage(Stage::self_correct) == 0);
    CHECK(env.server.calls_for_stage(Stage::reflect) == 9);

    auto metrics = compute_metrics(run);
    CHECK(metrics.total_missed == 0);
    for (const auto& [agent_id, coverage] : metrics.mandatory_coverage) {
        CHECK(coverage == doctest::Approx(1.0));
    }

    // The run directory carries the full layout.
    CHECK(std::filesystem::exists(out / "config.json"));
    CHECK(std::filesystem::exists(out / "day_01" / "agent_01" / "trips.json"));
    CHECK(std::filesystem::exists(out / "day_02" / "agent_09" / "memory.json"));
    CHECK(std::filesystem::exists(out / "day_03" / "agent_10" / "findings.json"));
    CHECK(std::filesystem::exists(out / "day_03" / "network.csv"));
    CHECK(std::filesystem::exists(out / "metrics" / "misses.csv"));
    CHECK(std::filesystem::exists(out / "report.md"));
    CHECK(std::filesystem::exists(out / "meta.json"));

    std::filesystem::remove_all(out);
}

TEST_CASE("a malformed reply costs one retry and is recorded in the trace") {
    auto cfg = contract_config();
    ServerEnv env(cfg);
    env.server.inject_malformed_once(9, 2, Stage::trips);
    const auto out = fresh_dir("tripweaver_contract_malformed");

    auto run = run_simulation(cfg, out);

    // One extra call against the trips stage, nothing degraded.
    CHECK(env.server.calls_for_stage(Stage::trips) == 10);
    CHECK(env.server.total_calls() == 46);

    const AgentDayLog* log = nullptr;
    for (const auto& l : run.days[1].logs) {
        if (l.agent_id == 9) log = &l;
    }
    REQUIRE(log != nullptr);
    CHECK(log->failed_stage.empty());
    CHECK(log->formatted_count == log->declared_count);
    bool saw_retry = false;
    for (const auto& stage_run : log->stage_runs) {
        if (stage_run.stage != "trips") continue;
        saw_retry = true;
        CHECK(stage_run.trace.attempts == 2);
        CHECK(stage_run.trace.ok);
    }
    CHECK(saw_retry);

    // The same trace lands in the persisted findings document.
    auto findings = read_json(out / "day_02" / "agent_09" / "findings.json");
    bool persisted = false;
    for (const auto& stage_run : findings.at("stage_runs")) {
        if (stage_run.at("stage") != "trips") continue;
        persisted = true;
        CHECK(stage_run.at("trace").at("attempts") == 2);
        CHECK(stage_run.at("trace").at("ok") == true);
    }
    CHECK(persisted);

    std::filesystem::remove_all(out);
}

TEST_CASE("a reply that drops a trip shows up as one missed trip") {
    auto cfg = contract_config();
    ServerEnv env(cfg);
    env.server.inject_drop_trip(10, 3);
    const auto out = fresh_dir("tripweaver_contract_drop");

    auto run = run_simulation(cfg, out);

    const AgentDayLog* log = nullptr;
    for (const auto& l : run.days[2].logs) {
        if (l.agent_id == 10) log = &l;
    }
    REQUIRE(log != nullptr);
    CHECK(log->failed_stage.empty());
    CHECK(log->formatted_count == log->declared_count - 1);

    auto metrics = compute_metrics(run);
    CHECK(metrics.total_missed == 1);
    CHECK(metrics.total_declared > 0);

    // The mandatory commute still happened; only the trailing leisure return
    // was lost, so coverage stays complete.
    for (const auto& [agent_id, coverage] : metrics.mandatory_coverage) {
        CHECK(coverage == doctest::Approx(1.0));
    }

    std::ifstream misses(out / "metrics" / "misses.csv");
    std::string line, day3;
    std::getline(misses, line);  // header
    while (std::getline(misses, line)) {
        if (line.rfind("3,", 0) == 0) day3 = line;
    }
    REQUIRE(!day3.empty());
    CHECK(day3.substr(day3.rfind(',') + 1) == "1");

    std::filesystem::remove_all(out);
}

TEST_CASE("transient http failures are absorbed by the transport retries") {
    auto cfg = contract_config();
    ServerEnv env(cfg);
    env.server.inject_http_error(2);
    const auto out = fresh_dir("tripweaver_contract_http");

    auto run = run_simulation(cfg, out);

    for (const auto& day : run.days) {
        for (const auto& log : day.logs) {
            CHECK(log.failed_stage.empty());
            CHECK(log.formatted_count == log.declared_count);
        }
    }
    auto metrics = compute_metrics(run);
    CHECK(metrics.total_missed == 0);

    std::filesystem::remove_all(out);
}

TEST_CASE("a hybrid assignment sends only its llm stages over the wire") {
    auto cfg = contract_config();
    cfg.days = 2;
    for (Stage stage : all_stages()) cfg.stage_cores[stage] = CoreId::oracle;
    cfg.stage_cores[Stage::trips] = CoreId::llm;

    ServerEnv env(cfg);
    const auto out = fresh_dir("tripweaver_contract_hybrid");

    auto run = run_simulation(cfg, out);

    auto tags = env.server.seen_tags();
    CHECK(static_cast<int>(tags.size()) == env.server.total_calls());
    CHECK(env.server.total_calls() == 6);  // 3 agents x 2 days, one stage each
    CHECK(count_tagged(tags, "stage=trips") == 6);
    CHECK(env.server.calls_for_stage(Stage::activities) == 0);
    CHECK(env.server.calls_for_stage(Stage::format) == 0);
    CHECK(env.server.calls_for_stage(Stage::reflect) == 0);

    for (const auto& day : run.days) {
        for (const auto& log : day.logs) {
            CHECK(log.failed_stage.empty());
            CHECK(log.formatted_count == log.declared_count);
        }
    }

    std::filesystem::remove_all(out);
}
