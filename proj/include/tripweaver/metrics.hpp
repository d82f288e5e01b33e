#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tripweaver/pipeline.hpp"
#include "tripweaver/scenario.hpp"
#include "tripweaver/traffic.hpp"

namespace tripweaver {

// One simulated day across all agents.
struct DayArtifacts {
    int day = 0;
    std::vector<AgentDayLog> logs;  // ascending agent id
    std::vector<std::vector<TripOutcome>> outcomes;  // parallel to logs
    std::map<int, std::vector<LinkBin>> link_time_series;
};

struct RunArtifacts {
    SimulationConfig config;
    std::string run_id;
    std::vector<DayArtifacts> days;
};

struct WeeklyFrequency {
    int occurrences = 0;    // days the kind occurred at least once
    double per_week = 0.0;  // occurrences / (days / 7)
};

struct ArrivalPoint {
    int day = 0;
    double arrival_minute = 0.0;
};

// Daily first arrival of one member at their mandatory zone.
struct ArrivalSeries {
    int agent_id = 0;
    std::string member;
    int required_minute = 0;
    std::vector<ArrivalPoint> points;
};

struct ConvergencePair {
    double first_week_mean_abs_dev = 0.0;
    double last_week_mean_abs_dev = 0.0;
    int first_week_points = 0;
    int last_week_points = 0;
};

struct Metrics {
    int days = 0;
    // agent -> activity kind name -> per-day occurrence flags (index day-1).
    std::map<int, std::map<std::string, std::vector<char>>> occurrence;
    std::map<int, std::map<std::string, WeeklyFrequency>> weekly;
    // Fraction of workdays on which the agent performed a mandatory activity.
    std::map<int, double> mandatory_coverage;
    std::vector<int> declared_per_day;
    std::vector<int> formatted_per_day;
    int total_declared = 0;
    int total_missed = 0;
    double miss_rate = 0.0;  // missed / declared
    std::vector<ArrivalSeries> arrivals;
    // Mean |arrival - required| over days 1..7 vs the final 7 days,
    // aggregated over all (agent, member) series and broken out per role.
    bool convergence_available = false;  // needs >= 14 days
    ConvergencePair convergence_overall;
    std::map<std::string, ConvergencePair> convergence_by_member;
};

Metrics compute_metrics(const RunArtifacts& run);

// Writes metrics/{activities,arrivals,misses}.csv and report.md under
// run_dir. Percentages render with one decimal ("0.4%").
void emit_report(const RunArtifacts& run, const Metrics& metrics,
                 const std::filesystem::path& run_dir);

std::string render_percent(double fraction);

}  // namespace tripweaver
