#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tripweaver/types.hpp"

namespace tripweaver {

enum class Stage { activities, tours, trips, self_correct, format, reflect };

Stage stage_from_string(const std::string& s);
const char* to_string(Stage stage);
// All six stages in pipeline order.
const std::vector<Stage>& all_stages();

enum class CoreId { oracle, llm };

CoreId core_id_from_string(const std::string& s);
const char* to_string(CoreId core);

struct LlmSettings {
    std::string model = "gpt-4o";
    double temperature = 0.7;
    int max_retries = 3;   // schema/parse retry budget per stage call
    int max_parallel = 4;  // in-flight request cap
};

struct SimulationConfig {
    int days = 1;  // >= 1
    std::uint64_t seed = 0;
    double time_step_minutes = 1.0;
    std::vector<Zone> zones;
    std::vector<Link> links;
    std::vector<HouseholdProfile> agents;
    std::map<Stage, CoreId> stage_cores;  // every stage mapped
    LlmSettings llm;
    int memory_window_days = 7;
    int self_correction_max_rounds = 2;
    // Optional features, both off by default.
    bool weekend_pattern = false;        // when on, days 6,7 of each week are off
    int memory_compact_after_days = 0;   // 0 = compaction disabled
};

// Parse and validate a scenario file. Throws ConfigError with a message that
// names the offending field path (e.g. "links[2].to: unknown zone 9").
SimulationConfig load_scenario(const std::filesystem::path& path);

// Same, from an already-parsed JSON document.
SimulationConfig parse_scenario(const nlohmann::json& doc);

// Inverse of parse_scenario: serialize(parse_scenario(j)) round-trips.
nlohmann::json serialize(const SimulationConfig& config);

// True when `day` (1-based) is a working day under the weekend switch.
bool is_workday(int day, bool weekend_pattern);

// One mandatory Activity per member that has a mandatory zone and travels,
// spanning the member's window. Empty on non-working days. When zones are
// supplied, activities at school zones are named "school", others "work".
std::vector<Activity> mandatory_activities(const HouseholdProfile& profile, int day,
                                           bool weekend_pattern = false,
                                           const std::vector<Zone>& zones = {});

}  // namespace tripweaver
