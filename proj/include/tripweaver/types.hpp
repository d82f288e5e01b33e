#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripweaver {

// Error taxonomy. ConfigError covers bad scenarios / bad plans / bad arguments
// (CLI exit code 1); RunError covers I/O and runtime failures (exit code 2).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct RunError : Error {
    using Error::Error;
};
struct LlmError : RunError {
    using RunError::RunError;
};

enum class ZoneKind { residential, school, business, recreational };

ZoneKind zone_kind_from_string(const std::string& s);
const char* to_string(ZoneKind kind);

struct Zone {
    int id = 0;
    ZoneKind kind = ZoneKind::residential;
    std::string label;
};

struct Link {
    int id = 0;
    int origin_zone = 0;
    int dest_zone = 0;
    double free_flow_minutes = 0.0;
    double capacity_vph = 0.0;
};

// Directed network with adjacency derived by build_network().
struct Network {
    std::vector<Zone> zones;  // ascending zone id
    std::vector<Link> links;  // ascending link id
    std::map<int, std::vector<int>> outgoing;  // zone id -> link ids, ascending
    std::map<int, std::vector<int>> incoming;

    bool has_zone(int id) const;
    bool has_link(int id) const;
    const Zone& zone(int id) const;  // throws ConfigError on unknown id
    const Link& link(int id) const;
};

struct MandatoryWindow {
    int start_minute = 0;  // minutes from midnight, 0 <= start < end < 1440
    int end_minute = 0;
};

struct MemberSchedule {
    std::string member;  // role name: "dad", "mom", "kid"
    std::optional<int> mandatory_zone;
    std::optional<MandatoryWindow> mandatory_window;
    bool travels = true;  // false for work-from-home members
};

struct HouseholdProfile {
    int agent_id = 0;
    std::string identity_text;
    std::string traits_text;
    std::vector<MemberSchedule> members;
    int home_zone = 0;

    const MemberSchedule* find_member(const std::string& role) const;
};

enum class ActivityKind { mandatory, maintenance, discretionary };

ActivityKind activity_kind_from_string(const std::string& s);
const char* to_string(ActivityKind kind);

struct Activity {
    std::string name;
    std::vector<std::string> member_roles;  // non-empty
    ActivityKind kind = ActivityKind::mandatory;
    std::optional<int> location_zone;  // absent = at home
    int desired_start_minute = 0;
    int duration_minutes = 0;
    // True iff location_zone is present and differs from the household's home.
    bool requires_travel = false;
};

// Home-anchored tour: starts and ends at anchor_zone.
struct Tour {
    std::vector<std::string> member_roles;
    int anchor_zone = 0;
    std::vector<Activity> ordered_activities;
};

// Fully resolved trip, ready for network loading (post format stage).
struct PlannedTrip {
    std::string trip_id;  // unique within a simulated day
    std::string member;
    std::string purpose;
    int origin_zone = 0;
    int dest_zone = 0;  // != origin_zone
    int departure_minute = 0;
    std::vector<int> route_links;  // contiguous origin -> dest
    int expected_arrival_minute = 0;  // >= departure_minute
};

struct TripOutcome {
    std::string trip_id;
    double actual_departure_minute = 0.0;
    double actual_arrival_minute = 0.0;
    double travel_minutes = 0.0;  // arrival - departure, >= free-flow time
    double delay_vs_expected_minutes = 0.0;  // signed
    std::vector<double> per_link_exit_minutes;  // monotone increasing
    // True when the departure was shifted to the prior trip's arrival because
    // the member was still traveling at the planned departure time.
    bool departure_delayed = false;
};

struct ActivityRecord {
    int day = 0;  // >= 1
    std::string text;
};

struct TravelRecord {
    int day = 0;
    std::string member;
    std::string purpose;
    int origin_zone = 0;
    int dest_zone = 0;
    std::vector<int> route_links;
    double departure_minute = 0.0;
    double expected_arrival_minute = 0.0;
    double actual_arrival_minute = 0.0;
    double travel_minutes = 0.0;
    std::string rendered_text;  // fixed template, see render_travel_record()
};

struct LongTermSummary {
    int from_day = 0;  // ranges are disjoint and contiguous across summaries
    int through_day = 0;
    std::string text;
};

enum class FindingCode {
    mandatory_missing,
    route_discontiguous,
    route_wrong_endpoints,
    infeasible_timing,
    overlapping_trips,
    bad_zone,
    late_expectation,
};

FindingCode finding_code_from_string(const std::string& s);
const char* to_string(FindingCode code);

struct ValidationFinding {
    FindingCode code = FindingCode::bad_zone;
    std::string detail;
    std::string subject;  // offending trip id / member
};

// Human-readable minute rendering: integral minutes print bare ("480"),
// fractional ones keep a single decimal ("480.5").
std::string format_minutes(double minutes);

}  // namespace tripweaver
