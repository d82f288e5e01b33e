#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tripweaver/cores.hpp"
#include "tripweaver/memory.hpp"
#include "tripweaver/scenario.hpp"
#include "tripweaver/traffic.hpp"
#include "tripweaver/types.hpp"

namespace tripweaver {

// Which core serves each stage. `oracle` must always be set; `llm` only when
// some stage is assigned to it.
struct CoreSet {
    DecisionCore* oracle = nullptr;
    DecisionCore* llm = nullptr;
    std::map<Stage, CoreId> assignment;

    DecisionCore& for_stage(Stage stage) const;
};

// Uniform view of a trip for validation, built from either a draft or the
// formatted plan.
struct TripView {
    std::string label;  // subject for findings: trip id, or member/purpose
    std::string member;
    int origin_zone = 0;
    int dest_zone = 0;
    int departure_minute = 0;
    std::optional<std::vector<int>> route_links;
    std::optional<int> expected_arrival_minute;
};

// Deterministic plan checks. Findings come out grouped by code in the order:
// mandatory_missing, route_discontiguous, route_wrong_endpoints,
// infeasible_timing, overlapping_trips, bad_zone, late_expectation.
// `expect_mandatory` is false on non-workdays.
std::vector<ValidationFinding> validate_plan(const std::vector<TripView>& trips,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory);
std::vector<ValidationFinding> validate_plan(const PlanDraft& draft,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory);
std::vector<ValidationFinding> validate_plan(const std::vector<PlannedTrip>& trips,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory);

struct StageRun {
    std::string stage;
    StageTrace trace;
};

// Everything one (agent, day) decision pass produced, for persistence and
// metrics.
struct AgentDayLog {
    int agent_id = 0;
    int day = 0;
    std::vector<Activity> activities;
    std::vector<Tour> tours;
    std::vector<PlanDraft> drafts;                         // initial + revisions
    std::vector<std::vector<ValidationFinding>> findings;  // per validation round
    std::vector<PlannedTrip> planned_trips;
    int declared_count = 0;
    int formatted_count = 0;
    std::vector<StageRun> stage_runs;
    std::string failed_stage;  // empty when the day succeeded
};

// Runs stages 1-5 for one agent and day: activities, tours, trip planning,
// validate/self-correct rounds (at most config.self_correction_max_rounds),
// formatting, final validation. An unrecoverable core failure in stages 1-4
// degrades to a zero-trip day with failed_stage set; a format failure drops
// the affected trips (counted as missed).
AgentDayLog run_agent_day(const HouseholdProfile& profile, int day, const MemoryStore& memory,
                          const CoreSet& cores, const SimulationConfig& config,
                          const Network& network);

// Stage 6: reflect on the day's outcomes and append the records to memory;
// optionally compacts old days per config.memory_compact_after_days.
void apply_feedback(MemoryStore& memory, const AgentDayLog& log,
                    const std::vector<TripOutcome>& outcomes, const CoreSet& cores,
                    const SimulationConfig& config, const Network& network,
                    const HouseholdProfile& profile);

// Context assembly shared by run_agent_day and apply_feedback (exposed for
// tests): retrieval window, rendered memory, network brief, derived seed.
DecisionContext make_context(const HouseholdProfile& profile, int day, const MemoryStore& memory,
                             const SimulationConfig& config, const Network& network);

}  // namespace tripweaver
