#include "tripweaver/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace tripweaver {
namespace {

constexpr double kEps = 1e-9;
constexpr int kRetrievalMaxItems = 64;

// Fastest known free-flow time between two zones, NaN when unreachable.
double fastest_fft(const Network& network, int origin, int dest) {
    auto routes = enumerate_routes(network, origin, dest);
    if (routes.empty()) return std::numeric_limits<double>::quiet_NaN();
    return free_flow_time(network, routes.front());
}

bool route_valid(const Network& network, const std::vector<int>& route, int origin, int dest) {
    if (route.empty()) return false;
    int at = origin;
    for (int link_id : route) {
        if (!network.has_link(link_id)) return false;
        const Link& link = network.link(link_id);
        if (link.origin_zone != at) return false;
        at = link.dest_zone;
    }
    return at == dest;
}

std::vector<TripView> make_views(const PlanDraft& draft) {
    std::vector<TripView> views;
    views.reserve(draft.declared_trips.size());
    for (std::size_t i = 0; i < draft.declared_trips.size(); ++i) {
        const DeclaredTrip& t = draft.declared_trips[i];
        TripView view;
        view.label = t.member + "/" + t.purpose + "#" + std::to_string(i + 1);
        view.member = t.member;
        view.origin_zone = t.origin_zone;
        view.dest_zone = t.dest_zone;
        view.departure_minute = t.departure_minute;
        view.route_links = t.route_links;
        views.push_back(std::move(view));
    }
    return views;
}

std::vector<TripView> make_views(const std::vector<PlannedTrip>& trips) {
    std::vector<TripView> views;
    views.reserve(trips.size());
    for (const PlannedTrip& t : trips) {
        TripView view;
        view.label = t.trip_id;
        view.member = t.member;
        view.origin_zone = t.origin_zone;
        view.dest_zone = t.dest_zone;
        view.departure_minute = t.departure_minute;
        view.route_links = t.route_links;
        view.expected_arrival_minute = t.expected_arrival_minute;
        views.push_back(std::move(view));
    }
    return views;
}

}  // namespace

DecisionCore& CoreSet::for_stage(Stage stage) const {
    CoreId id = CoreId::oracle;
    auto found = assignment.find(stage);
    if (found != assignment.end()) id = found->second;
    if (id == CoreId::llm) {
        if (!llm) throw ConfigError("stage " + std::string(to_string(stage)) +
                                    " is assigned to the llm core but none is configured");
        return *llm;
    }
    if (!oracle) throw ConfigError("oracle core is not configured");
    return *oracle;
}

std::vector<ValidationFinding> validate_plan(const std::vector<TripView>& trips,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory) {
    std::vector<ValidationFinding> mandatory, discontiguous, wrong_endpoints, infeasible,
        overlapping, bad_zone, late_expectation;

    // 1. Every member with a mandatory zone needs a trip there.
    if (expect_mandatory) {
        for (const auto& member : profile.members) {
            if (!member.mandatory_zone || !member.travels) continue;
            const bool covered = std::any_of(trips.begin(), trips.end(), [&](const TripView& t) {
                return t.member == member.member && t.dest_zone == *member.mandatory_zone;
            });
            if (!covered) {
                mandatory.push_back({FindingCode::mandatory_missing,
                                     "no trip to zone " + std::to_string(*member.mandatory_zone) +
                                         " for member '" + member.member + "'",
                                     member.member});
            }
        }
    }

    // 2. Per-trip structure and timing.
    std::vector<bool> zone_ok(trips.size(), true);
    std::vector<double> trip_fft(trips.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const TripView& t = trips[i];
        if (!network.has_zone(t.origin_zone)) {
            bad_zone.push_back(
                {FindingCode::bad_zone, "unknown zone " + std::to_string(t.origin_zone), t.label});
            zone_ok[i] = false;
        }
        if (!network.has_zone(t.dest_zone)) {
            bad_zone.push_back(
                {FindingCode::bad_zone, "unknown zone " + std::to_string(t.dest_zone), t.label});
            zone_ok[i] = false;
        }
        if (zone_ok[i] && t.origin_zone == t.dest_zone) {
            bad_zone.push_back({FindingCode::bad_zone,
                                "origin equals destination (zone " +
                                    std::to_string(t.origin_zone) + ")",
                                t.label});
            zone_ok[i] = false;
        }
        if (!zone_ok[i]) continue;

        bool has_valid_route = false;
        if (t.route_links && !t.route_links->empty()) {
            const auto& route = *t.route_links;
            bool links_exist = true;
            for (int link_id : route) {
                if (!network.has_link(link_id)) {
                    discontiguous.push_back({FindingCode::route_discontiguous,
                                             "unknown link " + std::to_string(link_id), t.label});
                    links_exist = false;
                }
            }
            if (links_exist) {
                bool contiguous = true;
                for (std::size_t k = 1; k < route.size(); ++k) {
                    const Link& prev = network.link(route[k - 1]);
                    const Link& next = network.link(route[k]);
                    if (prev.dest_zone != next.origin_zone) {
                        discontiguous.push_back(
                            {FindingCode::route_discontiguous,
                             "link " + std::to_string(route[k - 1]) + " ends at zone " +
                                 std::to_string(prev.dest_zone) + " but link " +
                                 std::to_string(route[k]) + " starts at zone " +
                                 std::to_string(next.origin_zone),
                             t.label});
                        contiguous = false;
                        break;
                    }
                }
                if (contiguous) {
                    const Link& first = network.link(route.front());
                    const Link& last = network.link(route.back());
                    if (first.origin_zone != t.origin_zone || last.dest_zone != t.dest_zone) {
                        wrong_endpoints.push_back(
                            {FindingCode::route_wrong_endpoints,
                             "route runs " + std::to_string(first.origin_zone) + "->" +
                                 std::to_string(last.dest_zone) + " but the trip is " +
                                 std::to_string(t.origin_zone) + "->" +
                                 std::to_string(t.dest_zone),
                             t.label});
                    } else {
                        has_valid_route = true;
                    }
                }
            }
        }

        double fft = has_valid_route ? free_flow_time(network, *t.route_links)
                                     : fastest_fft(network, t.origin_zone, t.dest_zone);
        trip_fft[i] = fft;
        if (!has_valid_route && std::isnan(fft) && (!t.route_links || t.route_links->empty())) {
            discontiguous.push_back({FindingCode::route_discontiguous,
                                     "no route exists from zone " + std::to_string(t.origin_zone) +
                                         " to zone " + std::to_string(t.dest_zone),
                                     t.label});
        }

        if (!std::isnan(fft)) {
            // 2a. Mandatory arrival must be achievable.
            const MemberSchedule* member = profile.find_member(t.member);
            if (member && member->mandatory_zone && member->mandatory_window &&
                t.dest_zone == *member->mandatory_zone) {
                const double earliest = t.departure_minute + fft;
                if (earliest > member->mandatory_window->start_minute + kEps) {
                    infeasible.push_back(
                        {FindingCode::infeasible_timing,
                         "departing at " + std::to_string(t.departure_minute) +
                             " arrives no earlier than " + format_minutes(earliest) +
                             ", after the window start " +
                             std::to_string(member->mandatory_window->start_minute),
                         t.label});
                }
            }
            // 2b. Declared expectation must be physically possible.
            if (t.expected_arrival_minute &&
                *t.expected_arrival_minute + kEps < t.departure_minute + fft) {
                late_expectation.push_back(
                    {FindingCode::late_expectation,
                     "expected arrival " + std::to_string(*t.expected_arrival_minute) +
                         " is before the earliest possible " +
                         format_minutes(t.departure_minute + fft),
                     t.label});
            }
        }
    }

    // 3. A member cannot be on two trips at once.
    std::map<std::string, std::vector<std::size_t>> by_member;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        if (zone_ok[i]) by_member[trips[i].member].push_back(i);
    }
    for (auto& [member, indices] : by_member) {
        std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
            if (trips[a].departure_minute != trips[b].departure_minute) {
                return trips[a].departure_minute < trips[b].departure_minute;
            }
            return trips[a].label < trips[b].label;
        });
        for (std::size_t k = 1; k < indices.size(); ++k) {
            const TripView& prev = trips[indices[k - 1]];
            const TripView& next = trips[indices[k]];
            double end = prev.expected_arrival_minute
                             ? static_cast<double>(*prev.expected_arrival_minute)
                             : prev.departure_minute + trip_fft[indices[k - 1]];
            if (std::isnan(end)) continue;
            if (next.departure_minute + kEps < end) {
                overlapping.push_back({FindingCode::overlapping_trips,
                                       "'" + prev.label + "' is still under way at " +
                                           format_minutes(end) + " when '" + next.label +
                                           "' departs at " +
                                           std::to_string(next.departure_minute),
                                       member});
            }
        }
    }

    std::vector<ValidationFinding> all;
    for (auto* bucket :
         {&mandatory, &discontiguous, &wrong_endpoints, &infeasible, &overlapping, &bad_zone,
          &late_expectation}) {
        all.insert(all.end(), bucket->begin(), bucket->end());
    }
    return all;
}

std::vector<ValidationFinding> validate_plan(const PlanDraft& draft,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory) {
    return validate_plan(make_views(draft), profile, network, expect_mandatory);
}

std::vector<ValidationFinding> validate_plan(const std::vector<PlannedTrip>& trips,
                                             const HouseholdProfile& profile,
                                             const Network& network, bool expect_mandatory) {
    return validate_plan(make_views(trips), profile, network, expect_mandatory);
}

DecisionContext make_context(const HouseholdProfile& profile, int day, const MemoryStore& memory,
                             const SimulationConfig& config, const Network& network) {
    DecisionContext ctx;
    ctx.profile = profile;
    ctx.day = day;
    ctx.network_brief = network_brief(network);
    ctx.rng_seed = derive_rng_seed(config.seed, profile.agent_id, day);

    const Retrieval activity =
        retrieve(memory, MemoryKind::activity, day, config.memory_window_days, kRetrievalMaxItems);
    for (const auto& record : activity.activity) {
        ctx.retrieved_activity_memory.push_back(record.text);
    }
    for (const auto& summary : activity.summaries) {
        ctx.retrieved_activity_memory.push_back("Summary of days " +
                                                std::to_string(summary.from_day) + "-" +
                                                std::to_string(summary.through_day) + ": " +
                                                summary.text);
    }

    const Retrieval travel =
        retrieve(memory, MemoryKind::travel, day, config.memory_window_days, kRetrievalMaxItems);
    for (const auto& record : travel.travel) {
        ctx.retrieved_travel_memory.push_back(
            record.rendered_text.empty() ? render_travel_record(record) : record.rendered_text);
    }
    for (const auto& summary : travel.summaries) {
        ctx.retrieved_travel_memory.push_back("Summary of days " +
                                              std::to_string(summary.from_day) + "-" +
                                              std::to_string(summary.through_day) + ": " +
                                              summary.text);
    }
    return ctx;
}

AgentDayLog run_agent_day(const HouseholdProfile& profile, int day, const MemoryStore& memory,
                          const CoreSet& cores, const SimulationConfig& config,
                          const Network& network) {
    AgentDayLog log;
    log.agent_id = profile.agent_id;
    log.day = day;

    DecisionContext ctx = make_context(profile, day, memory, config, network);
    StageTrace trace;
    ctx.trace = &trace;
    const bool expect_mandatory = is_workday(day, config.weekend_pattern);

    Stage current = Stage::activities;
    auto record_stage = [&](Stage stage) {
        log.stage_runs.push_back({to_string(stage), trace});
        trace = StageTrace{};
    };

    try {
        current = Stage::activities;
        log.activities = cores.for_stage(Stage::activities).generate_activities(ctx);
        record_stage(Stage::activities);

        current = Stage::tours;
        log.tours = cores.for_stage(Stage::tours).build_tours(log.activities, ctx);
        record_stage(Stage::tours);

        current = Stage::trips;
        PlanDraft draft = cores.for_stage(Stage::trips).plan_trips(log.tours, ctx);
        record_stage(Stage::trips);
        log.drafts.push_back(draft);
        log.declared_count = draft.declared_count;

        auto findings = validate_plan(draft, profile, network, expect_mandatory);
        log.findings.push_back(findings);
        int round = 0;
        while (!findings.empty() && round < config.self_correction_max_rounds) {
            current = Stage::self_correct;
            draft = cores.for_stage(Stage::self_correct).self_correct(draft, findings, ctx);
            record_stage(Stage::self_correct);
            log.drafts.push_back(draft);
            log.declared_count = draft.declared_count;
            findings = validate_plan(draft, profile, network, expect_mandatory);
            log.findings.push_back(findings);
            ++round;
        }

        current = Stage::format;
        log.planned_trips = cores.for_stage(Stage::format).format_trips(draft, ctx);
        record_stage(Stage::format);
        log.formatted_count = static_cast<int>(log.planned_trips.size());

        // Findings that survive self-correction are logged, not fatal: the
        // day still runs with whatever plan came out.
        log.findings.push_back(validate_plan(log.planned_trips, profile, network,
                                             expect_mandatory));
    } catch (const RunError&) {
        log.failed_stage = to_string(current);
        log.stage_runs.push_back({to_string(current), trace});
        log.planned_trips.clear();
        log.formatted_count = 0;
    }
    return log;
}

void apply_feedback(MemoryStore& memory, const AgentDayLog& log,
                    const std::vector<TripOutcome>& outcomes, const CoreSet& cores,
                    const SimulationConfig& config, const Network& network,
                    const HouseholdProfile& profile) {
    DecisionContext ctx = make_context(profile, log.day, memory, config, network);
    StageTrace trace;
    ctx.trace = &trace;

    const Reflection reflection = cores.for_stage(Stage::reflect)
                                      .reflect(outcomes, log.activities, log.planned_trips, ctx);
    for (const auto& record : reflection.activity_records) {
        append_record(memory, record);
    }
    for (const auto& record : reflection.travel_records) {
        append_record(memory, record);
    }

    if (config.memory_compact_after_days > 0 &&
        log.day % config.memory_compact_after_days == 0) {
        const int through = log.day - config.memory_window_days;
        if (through >= 1) {
            compact(memory, through,
                    [](std::span<const ActivityRecord> activity,
                       std::span<const TravelRecord> travel, int from_day, int through_day) {
                        return template_rollup(activity, travel, from_day, through_day);
                    });
        }
    }
}

}  // namespace tripweaver
