#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tripweaver/scenario.hpp"
#include "tripweaver/types.hpp"

namespace tripweaver {

class LlmClient;

// How a single stage call went: how many model attempts it took and, when it
// degraded, why. Cores fill this through DecisionContext::trace when set.
struct StageTrace {
    int attempts = 1;
    bool ok = true;
    std::string error;
};

// Everything a decision core may look at for one (agent, day). Memory is
// passed as rendered text so the scripted core and the LLM core see the
// exact same information.
struct DecisionContext {
    HouseholdProfile profile;
    int day = 1;
    std::vector<std::string> retrieved_activity_memory;  // newest first
    std::vector<std::string> retrieved_travel_memory;    // newest first
    std::string network_brief;
    std::uint64_t rng_seed = 0;
    StageTrace* trace = nullptr;  // optional out-param, owned by the caller
};

// Trip as declared in a plan draft; the route is optional until the format
// stage resolves it.
struct DeclaredTrip {
    std::string member;
    std::string purpose;
    int origin_zone = 0;
    int dest_zone = 0;
    int departure_minute = 0;
    std::optional<std::vector<int>> route_links;
};

struct PlanDraft {
    std::string narrative;
    std::vector<DeclaredTrip> declared_trips;
    int declared_count = 0;  // always == declared_trips.size()
};

struct Reflection {
    std::vector<ActivityRecord> activity_records;
    std::vector<TravelRecord> travel_records;
};

// The six per-day decision operations. Both cores implement this interface;
// the pipeline picks a core per stage from the config.
class DecisionCore {
public:
    virtual ~DecisionCore() = default;

    virtual std::vector<Activity> generate_activities(const DecisionContext& ctx) = 0;
    virtual std::vector<Tour> build_tours(const std::vector<Activity>& activities,
                                          const DecisionContext& ctx) = 0;
    virtual PlanDraft plan_trips(const std::vector<Tour>& tours, const DecisionContext& ctx) = 0;
    virtual PlanDraft self_correct(const PlanDraft& draft,
                                   const std::vector<ValidationFinding>& findings,
                                   const DecisionContext& ctx) = 0;
    virtual std::vector<PlannedTrip> format_trips(const PlanDraft& draft,
                                                  const DecisionContext& ctx) = 0;
    virtual Reflection reflect(const std::vector<TripOutcome>& outcomes,
                               const std::vector<Activity>& performed,
                               const std::vector<PlannedTrip>& trips,
                               const DecisionContext& ctx) = 0;
};

// Tunable constants of the scripted core.
struct OracleTuning {
    int grocery_period_days = 5;        // base cadence
    int grocery_trait_period_days = 1;  // households that value fresh groceries
    double recreation_probability = 0.26;  // per day, seeded draw
    int grocery_start_minute = 960;     // 16:00
    int grocery_duration_minutes = 60;
    int recreation_start_minute = 1110;  // 18:30
    int recreation_duration_minutes = 90;
    // Departure adjustment (morning mandatory trips): late by m -> depart
    // m + late_extra earlier; early by e > early_tolerance -> depart
    // max(1, (e - early_tolerance) / early_divisor) later; else keep.
    int late_extra_minutes = 1;
    int early_tolerance_minutes = 2;
    int early_divisor = 2;
    int max_daily_shift_minutes = 60;
    bool weekend_pattern = false;  // mirrors SimulationConfig.weekend_pattern
};

std::unique_ptr<DecisionCore> make_oracle_core(const Network& network, OracleTuning tuning = {});

std::unique_ptr<DecisionCore> make_llm_core(const Network& network, const LlmSettings& settings,
                                            std::shared_ptr<LlmClient> client);

// Deterministic prose rendering of the network for prompts: zones, the
// fastest routes between zone pairs, free-flow times. No capacities.
std::string network_brief(const Network& network);

// Per-(run, agent, day) seed; splitmix64-mixed so nearby inputs decorrelate.
std::uint64_t derive_rng_seed(std::uint64_t run_seed, int agent_id, int day);

// Advances the state and returns a uniform draw in [0, 1).
double uniform01(std::uint64_t& state);

}  // namespace tripweaver
