#include "tripweaver/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <sstream>

#include "tripweaver/json_io.hpp"
#include "tripweaver/llm_client.hpp"
#include "tripweaver/pipeline.hpp"

namespace tripweaver {
namespace {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string two_digits(int value) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", value);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunError("cannot write " + path.string());
    out << content;
    if (!out) throw RunError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw RunError("invalid json in " + path.string() + ": " + e.what());
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string render_draft_text(const PlanDraft& draft) {
    std::ostringstream out;
    out << draft.narrative << "\n";
    for (const auto& trip : draft.declared_trips) {
        out << trip.member << " " << trip.purpose << ": " << trip.origin_zone << " -> "
            << trip.dest_zone << " depart " << trip.departure_minute;
        if (trip.route_links) {
            out << " via [";
            for (std::size_t i = 0; i < trip.route_links->size(); ++i) {
                if (i) out << ",";
                out << (*trip.route_links)[i];
            }
            out << "]";
        } else {
            out << " (unrouted)";
        }
        out << "\n";
    }
    return out.str();
}

json findings_doc(const AgentDayLog& log) {
    json rounds = json::array();
    for (const auto& round : log.findings) rounds.push_back(round);
    json stage_runs = json::array();
    for (const auto& run : log.stage_runs) {
        stage_runs.push_back({{"stage", run.stage}, {"trace", run.trace}});
    }
    return json{{"declared_count", log.declared_count},
                {"failed_stage", log.failed_stage.empty() ? json() : json(log.failed_stage)},
                {"formatted_count", log.formatted_count},
                {"rounds", rounds},
                {"stage_runs", stage_runs}};
}

void persist_agent_day(const std::filesystem::path& day_dir, const AgentDayLog& log,
                       const std::vector<TripOutcome>& outcomes, const MemoryStore& memory) {
    const auto dir = day_dir / ("agent_" + two_digits(log.agent_id));
    std::filesystem::create_directories(dir);
    write_json(dir / "activities.json", json(log.activities));
    write_json(dir / "tours.json", json(log.tours));
    write_text(dir / "draft.txt",
               log.drafts.empty() ? std::string("(no draft)\n")
                                  : render_draft_text(log.drafts.back()));
    write_json(dir / "findings.json", findings_doc(log));
    write_json(dir / "trips.json",
               json{{"declared_count", log.declared_count}, {"trips", log.planned_trips}});
    write_json(dir / "outcomes.json", json(outcomes));
    write_json(dir / "memory.json", json(memory));
}

void persist_network_csv(const std::filesystem::path& day_dir,
                         const std::map<int, std::vector<LinkBin>>& series) {
    std::ostringstream csv;
    csv << "link_id,bin_start_minute,entries,exits,queue_length\n";
    for (const auto& [link_id, bins] : series) {
        for (const auto& bin : bins) {
            csv << link_id << ',' << format_minutes(bin.bin_start_minute) << ',' << bin.entries
                << ',' << bin.exits << ',' << bin.queue_length << '\n';
        }
    }
    write_text(day_dir / "network.csv", csv.str());
}

bool any_llm_stage(const SimulationConfig& config) {
    for (const auto& [stage, core] : config.stage_cores) {
        if (core == CoreId::llm) return true;
    }
    return false;
}

}  // namespace

std::string run_id_for(const SimulationConfig& config) {
    const std::uint64_t hash = fnv1a64(serialize(config).dump());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

RunArtifacts run_simulation(const SimulationConfig& base_config,
                            const std::filesystem::path& out_dir, const RunOptions& options) {
    SimulationConfig config = base_config;
    if (options.days_override) {
        if (*options.days_override < 1) throw ConfigError("days: must be >= 1");
        config.days = *options.days_override;
    }
    if (options.seed_override) config.seed = *options.seed_override;
    if (options.core_override) {
        for (Stage stage : all_stages()) config.stage_cores[stage] = *options.core_override;
    }

    const Network network = build_network(config.zones, config.links);

    OracleTuning tuning;
    tuning.weekend_pattern = config.weekend_pattern;
    auto oracle = make_oracle_core(network, tuning);

    std::shared_ptr<LlmClient> client;
    std::unique_ptr<DecisionCore> llm;
    if (any_llm_stage(config)) {
        client = std::make_shared<LlmClient>(config.llm);
        llm = make_llm_core(network, config.llm, client);
    }
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.llm = llm.get();
    cores.assignment = config.stage_cores;

    std::filesystem::create_directories(out_dir);
    if (!std::filesystem::is_empty(out_dir)) {
        throw RunError("output directory " + out_dir.string() + " is not empty");
    }

    RunArtifacts run;
    run.config = config;
    run.run_id = run_id_for(config);
    write_json(out_dir / "config.json", serialize(config));

    std::map<int, MemoryStore> memory;
    for (const auto& profile : config.agents) memory[profile.agent_id] = MemoryStore{};

    SimOptions sim_options;
    sim_options.time_step_minutes = config.time_step_minutes;
    sim_options.traveler_key = [](const PlannedTrip& trip) {
        const auto cut = trip.trip_id.find('-');
        return trip.trip_id.substr(0, cut) + "/" + trip.member;
    };

    const bool parallel_agents = any_llm_stage(config);

    for (int day = 1; day <= config.days; ++day) {
        DayArtifacts artifacts;
        artifacts.day = day;

        if (parallel_agents) {
            std::vector<std::future<AgentDayLog>> futures;
            futures.reserve(config.agents.size());
            for (const auto& profile : config.agents) {
                futures.push_back(std::async(std::launch::async, [&, profile] {
                    return run_agent_day(profile, day, memory.at(profile.agent_id), cores,
                                         config, network);
                }));
            }
            for (auto& future : futures) artifacts.logs.push_back(future.get());
        } else {
            for (const auto& profile : config.agents) {
                artifacts.logs.push_back(
                    run_agent_day(profile, day, memory.at(profile.agent_id), cores, config,
                                  network));
            }
        }

        std::vector<PlannedTrip> merged;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;  // offset, count per log
        for (const auto& log : artifacts.logs) {
            ranges.emplace_back(merged.size(), log.planned_trips.size());
            merged.insert(merged.end(), log.planned_trips.begin(), log.planned_trips.end());
        }

        const DayLoadResult loaded = simulate_day(network, merged, sim_options);
        artifacts.link_time_series = loaded.link_time_series;
        for (std::size_t i = 0; i < artifacts.logs.size(); ++i) {
            artifacts.outcomes.emplace_back(loaded.outcomes.begin() + ranges[i].first,
                                            loaded.outcomes.begin() + ranges[i].first +
                                                ranges[i].second);
        }

        const auto day_dir = out_dir / ("day_" + two_digits(day));
        std::filesystem::create_directories(day_dir);
        for (std::size_t i = 0; i < artifacts.logs.size(); ++i) {
            const AgentDayLog& log = artifacts.logs[i];
            const HouseholdProfile& profile = config.agents[i];
            apply_feedback(memory.at(log.agent_id), log, artifacts.outcomes[i], cores, config,
                           network, profile);
            persist_agent_day(day_dir, log, artifacts.outcomes[i], memory.at(log.agent_id));
        }
        persist_network_csv(day_dir, artifacts.link_time_series);

        run.days.push_back(std::move(artifacts));
    }

    const Metrics metrics = compute_metrics(run);
    emit_report(run, metrics, out_dir);

    write_json(out_dir / "meta.json", json{{"created_utc", utc_timestamp()},
                                           {"run_id", run.run_id},
                                           {"tool", "tripweaver"},
                                           {"version", "0.1.0"}});
    return run;
}

RunArtifacts load_run_dir(const std::filesystem::path& run_dir) {
    if (!std::filesystem::is_directory(run_dir)) {
        throw RunError("not a run directory: " + run_dir.string());
    }
    RunArtifacts run;
    run.config = parse_scenario(read_json(run_dir / "config.json"));
    run.run_id = run_id_for(run.config);
    if (std::filesystem::exists(run_dir / "meta.json")) {
        const json meta = read_json(run_dir / "meta.json");
        run.run_id = meta.value("run_id", run.run_id);
    }

    std::vector<std::filesystem::path> day_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("day_", 0) == 0) {
            day_dirs.push_back(entry.path());
        }
    }
    std::sort(day_dirs.begin(), day_dirs.end());

    for (const auto& day_dir : day_dirs) {
        DayArtifacts artifacts;
        artifacts.day = std::stoi(day_dir.filename().string().substr(4));

        std::vector<std::filesystem::path> agent_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(day_dir)) {
            if (entry.is_directory() &&
                entry.path().filename().string().rfind("agent_", 0) == 0) {
                agent_dirs.push_back(entry.path());
            }
        }
        std::sort(agent_dirs.begin(), agent_dirs.end());

        for (const auto& agent_dir : agent_dirs) {
            AgentDayLog log;
            log.agent_id = std::stoi(agent_dir.filename().string().substr(6));
            log.day = artifacts.day;
            log.activities = read_json(agent_dir / "activities.json")
                                 .get<std::vector<Activity>>();
            log.tours = read_json(agent_dir / "tours.json").get<std::vector<Tour>>();
            const json trips = read_json(agent_dir / "trips.json");
            log.planned_trips = trips.at("trips").get<std::vector<PlannedTrip>>();
            log.formatted_count = static_cast<int>(log.planned_trips.size());
            const json findings = read_json(agent_dir / "findings.json");
            log.declared_count = findings.value("declared_count", log.formatted_count);
            if (findings.contains("failed_stage") && findings.at("failed_stage").is_string()) {
                log.failed_stage = findings.at("failed_stage").get<std::string>();
            }
            for (const auto& round : findings.value("rounds", json::array())) {
                log.findings.push_back(round.get<std::vector<ValidationFinding>>());
            }
            for (const auto& stage_run : findings.value("stage_runs", json::array())) {
                StageRun run_entry;
                run_entry.stage = stage_run.value("stage", std::string{});
                if (stage_run.contains("trace")) {
                    run_entry.trace = stage_run.at("trace").get<StageTrace>();
                }
                log.stage_runs.push_back(std::move(run_entry));
            }
            artifacts.outcomes.push_back(
                read_json(agent_dir / "outcomes.json").get<std::vector<TripOutcome>>());
            artifacts.logs.push_back(std::move(log));
        }
        run.days.push_back(std::move(artifacts));
    }
    if (run.days.empty()) {
        throw RunError("run directory has no day_<dd> subdirectories: " + run_dir.string());
    }
    return run;
}

}  // namespace tripweaver
