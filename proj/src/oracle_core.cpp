#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "tripweaver/cores.hpp"
#include "tripweaver/memory.hpp"
#include "tripweaver/traffic.hpp"

namespace tripweaver {

namespace {

// Structured view of a rendered travel-memory line. The rendering template
// is fixed, so the scripted core can read back exactly what an LLM would.
struct ParsedTravel {
    int day = 0;
    std::string member;
    int origin_zone = 0;
    int dest_zone = 0;
    std::string purpose;
    double departed = 0.0;
    double expected = 0.0;
    double arrived = 0.0;
};

std::optional<std::string> slice(const std::string& text, size_t& pos, const std::string& until) {
    size_t end = text.find(until, pos);
    if (end == std::string::npos) return std::nullopt;
    std::string out = text.substr(pos, end - pos);
    pos = end + until.size();
    return out;
}

std::optional<ParsedTravel> parse_travel_text(const std::string& text) {
    ParsedTravel t;
    size_t pos = 0;
    if (text.rfind("Day ", 0) != 0) return std::nullopt;
    pos = 4;
    try {
        auto day = slice(text, pos, ": ");
        if (!day) return std::nullopt;
        t.day = std::stoi(*day);
        auto member = slice(text, pos, " traveled ");
        if (!member) return std::nullopt;
        t.member = *member;
        auto origin = slice(text, pos, "→");
        if (!origin) return std::nullopt;
        t.origin_zone = std::stoi(*origin);
        auto dest = slice(text, pos, " for ");
        if (!dest) return std::nullopt;
        t.dest_zone = std::stoi(*dest);
        auto purpose = slice(text, pos, " via links ");
        if (!purpose) return std::nullopt;
        t.purpose = *purpose;
        if (!slice(text, pos, ", departed ")) return std::nullopt;
        auto departed = slice(text, pos, ", expected ");
        if (!departed) return std::nullopt;
        t.departed = std::stod(*departed);
        auto expected = slice(text, pos, ", arrived ");
        if (!expected) return std::nullopt;
        t.expected = std::stod(*expected);
        auto arrived = slice(text, pos, " (");
        if (!arrived) return std::nullopt;
        t.arrived = std::stod(*arrived);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return t;
}

// "Day 5: grocery shopping (maintenance) by mom at zone 4 from 960 for 60 min."
struct ParsedActivity {
    int day = 0;
    std::string name;
    std::string kind;
};

std::optional<ParsedActivity> parse_activity_text(const std::string& text) {
    ParsedActivity a;
    if (text.rfind("Day ", 0) != 0) return std::nullopt;
    size_t pos = 4;
    try {
        auto day = slice(text, pos, ": ");
        if (!day) return std::nullopt;
        a.day = std::stoi(*day);
        auto name = slice(text, pos, " (");
        if (!name) return std::nullopt;
        a.name = *name;
        auto kind = slice(text, pos, ") by ");
        if (!kind) return std::nullopt;
        a.kind = *kind;
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return a;
}

class OracleCore final : public DecisionCore {
public:
    OracleCore(const Network& network, OracleTuning tuning)
        : network_(network), tuning_(tuning) {}

    std::vector<Activity> generate_activities(const DecisionContext& ctx) override;
    std::vector<Tour> build_tours(const std::vector<Activity>& activities,
                                  const DecisionContext& ctx) override;
    PlanDraft plan_trips(const std::vector<Tour>& tours, const DecisionContext& ctx) override;
    PlanDraft self_correct(const PlanDraft& draft, const std::vector<ValidationFinding>& findings,
                           const DecisionContext& ctx) override;
    std::vector<PlannedTrip> format_trips(const PlanDraft& draft,
                                          const DecisionContext& ctx) override;
    Reflection reflect(const std::vector<TripOutcome>& outcomes,
                       const std::vector<Activity>& performed,
                       const std::vector<PlannedTrip>& trips, const DecisionContext& ctx) override;

private:
    std::optional<int> errand_zone() const;
    std::string errand_member(const HouseholdProfile& profile) const;
    std::vector<int> pick_route(int origin, int dest, bool experienced, int agent_id) const;
    std::optional<ParsedTravel> last_matching_travel(const DecisionContext& ctx,
                                                     const std::string& member,
                                                     const std::string& purpose) const;

    const Network& network_;
    OracleTuning tuning_;
};

std::optional<int> OracleCore::errand_zone() const {
    for (const auto& z : network_.zones) {
        if (z.kind == ZoneKind::recreational) return z.id;
    }
    return std::nullopt;
}

std::string OracleCore::errand_member(const HouseholdProfile& profile) const {
    // The member without a fixed out-of-home obligation runs the errands.
    for (const auto& m : profile.members) {
        if (!m.mandatory_zone) return m.member;
    }
    return profile.members.front().member;
}

std::vector<Activity> OracleCore::generate_activities(const DecisionContext& ctx) {
    std::vector<Activity> acts =
        mandatory_activities(ctx.profile, ctx.day, tuning_.weekend_pattern, network_.zones);

    const std::optional<int> zone = errand_zone();
    const std::string runner = errand_member(ctx.profile);

    if (zone) {
        // Maintenance: grocery on a fixed cadence; households that value
        // fresh groceries restock daily.
        const bool fresh = ctx.profile.traits_text.find("fresh groceries") != std::string::npos;
        const int period = fresh ? tuning_.grocery_trait_period_days : tuning_.grocery_period_days;
        int last_grocery_day = 0;
        for (const auto& text : ctx.retrieved_activity_memory) {
            auto parsed = parse_activity_text(text);
            if (parsed && parsed->kind == "maintenance" &&
                parsed->name.find("grocery") != std::string::npos) {
                last_grocery_day = std::max(last_grocery_day, parsed->day);
            }
        }
        if (ctx.day - last_grocery_day >= period) {
            Activity a;
            a.name = "grocery shopping";
            a.member_roles = {runner};
            a.kind = ActivityKind::maintenance;
            a.location_zone = zone;
            a.desired_start_minute = tuning_.grocery_start_minute;
            a.duration_minutes = tuning_.grocery_duration_minutes;
            a.requires_travel = *zone != ctx.profile.home_zone;
            acts.push_back(std::move(a));
        }

        // Discretionary: recreation, daily for households that value outdoor
        // exercise, otherwise a seeded per-day draw.
        const bool outdoor =
            ctx.profile.traits_text.find("outdoor exercises") != std::string::npos;
        bool recreation = outdoor;
        if (!recreation) {
            std::uint64_t state = ctx.rng_seed;
            recreation = uniform01(state) < tuning_.recreation_probability;
        }
        if (recreation) {
            Activity a;
            a.name = "recreational outing";
            a.member_roles = {runner};
            a.kind = ActivityKind::discretionary;
            a.location_zone = zone;
            a.desired_start_minute = tuning_.recreation_start_minute;
            a.duration_minutes = tuning_.recreation_duration_minutes;
            a.requires_travel = *zone != ctx.profile.home_zone;
            acts.push_back(std::move(a));
        }
    }
    return acts;
}

std::vector<Tour> OracleCore::build_tours(const std::vector<Activity>& activities,
                                          const DecisionContext& ctx) {
    std::vector<Tour> tours;
    for (const auto& a : activities) {
        if (!a.requires_travel) continue;
        Tour t;
        t.member_roles = a.member_roles;
        t.anchor_zone = ctx.profile.home_zone;
        t.ordered_activities = {a};
        tours.push_back(std::move(t));
    }
    return tours;
}

std::optional<ParsedTravel> OracleCore::last_matching_travel(const DecisionContext& ctx,
                                                             const std::string& member,
                                                             const std::string& purpose) const {
    // Memory arrives newest first; the first match is the most recent.
    for (const auto& text : ctx.retrieved_travel_memory) {
        auto parsed = parse_travel_text(text);
        if (parsed && parsed->member == member && parsed->purpose == purpose) return parsed;
    }
    return std::nullopt;
}

std::vector<int> OracleCore::pick_route(int origin, int dest, bool experienced,
                                        int agent_id) const {
    auto routes = enumerate_routes(network_, origin, dest, 4);
    if (routes.empty()) return {};
    if (!experienced) return routes.front();  // no stated intent without memory
    // Balance equal-minimum-cost alternatives across agents.
    const double best = free_flow_time(network_, routes.front());
    int equal_count = 0;
    for (const auto& r : routes) {
        if (free_flow_time(network_, r) <= best + 1e-9) ++equal_count;
        else break;
    }
    return routes[(agent_id - 1) % equal_count];
}

PlanDraft OracleCore::plan_trips(const std::vector<Tour>& tours, const DecisionContext& ctx) {
    PlanDraft draft;
    for (const auto& tour : tours) {
        for (const auto& member : tour.member_roles) {
            for (const auto& activity : tour.ordered_activities) {
                if (!activity.location_zone) continue;
                const int dest = *activity.location_zone;
                const int home = tour.anchor_zone;
                const int required = activity.desired_start_minute;

                auto previous = last_matching_travel(ctx, member, activity.name);
                const std::vector<int> out_route =
                    pick_route(home, dest, previous.has_value(), ctx.profile.agent_id);
                if (out_route.empty()) continue;
                const int fft =
                    static_cast<int>(std::lround(free_flow_time(network_, out_route)));

                int departure = required - fft;
                if (previous && activity.kind == ActivityKind::mandatory) {
                    // Day-to-day adjustment against the required arrival.
                    const int prev_dep = static_cast<int>(std::lround(previous->departed));
                    const double lateness = previous->arrived - required;
                    int shift = 0;  // positive = later
                    if (lateness > 0) {
                        shift = -(static_cast<int>(std::lround(lateness)) +
                                  tuning_.late_extra_minutes);
                    } else {
                        const int early = static_cast<int>(std::lround(-lateness));
                        if (early > tuning_.early_tolerance_minutes) {
                            shift = std::max(1, (early - tuning_.early_tolerance_minutes) /
                                                    tuning_.early_divisor);
                        }
                    }
                    shift = std::clamp(shift, -tuning_.max_daily_shift_minutes,
                                       tuning_.max_daily_shift_minutes);
                    departure = prev_dep + shift;
                }
                departure = std::max(departure, 0);

                DeclaredTrip out;
                out.member = member;
                out.purpose = activity.name;
                out.origin_zone = home;
                out.dest_zone = dest;
                out.departure_minute = departure;
                out.route_links = out_route;
                draft.declared_trips.push_back(std::move(out));

                const std::string back_purpose = activity.name + " return";
                auto back_prev = last_matching_travel(ctx, member, back_purpose);
                const std::vector<int> back_route =
                    pick_route(dest, home, back_prev.has_value(), ctx.profile.agent_id);
                if (back_route.empty()) continue;
                DeclaredTrip back;
                back.member = member;
                back.purpose = back_purpose;
                back.origin_zone = dest;
                back.dest_zone = home;
                back.departure_minute = activity.desired_start_minute + activity.duration_minutes;
                back.route_links = back_route;
                draft.declared_trips.push_back(std::move(back));
            }
        }
    }
    draft.declared_count = static_cast<int>(draft.declared_trips.size());
    std::ostringstream os;
    os << "Day " << ctx.day << " plan for household " << ctx.profile.agent_id << ": "
       << draft.declared_count << " trips.";
    draft.narrative = os.str();
    return draft;
}

PlanDraft OracleCore::self_correct(const PlanDraft& draft,
                                   const std::vector<ValidationFinding>& findings,
                                   const DecisionContext& ctx) {
    PlanDraft fixed = draft;
    auto route_valid = [&](const DeclaredTrip& t) {
        if (!t.route_links || t.route_links->empty()) return false;
        try {
            int at = t.origin_zone;
            for (int id : *t.route_links) {
                const Link& l = network_.link(id);
                if (l.origin_zone != at) return false;
                at = l.dest_zone;
            }
            return at == t.dest_zone;
        } catch (const ConfigError&) {
            return false;
        }
    };

    // Drop trips whose endpoints are unusable, repair the rest.
    std::vector<DeclaredTrip> kept;
    for (auto t : fixed.declared_trips) {
        if (!network_.has_zone(t.origin_zone) || !network_.has_zone(t.dest_zone) ||
            t.origin_zone == t.dest_zone) {
            continue;  // bad_zone: not repairable
        }
        if (!route_valid(t)) {
            auto routes = enumerate_routes(network_, t.origin_zone, t.dest_zone, 4);
            if (routes.empty()) continue;
            t.route_links = routes.front();
        }
        kept.push_back(std::move(t));
    }
    fixed.declared_trips = std::move(kept);

    // Re-seat mandatory coverage and timing.
    for (const auto& m : ctx.profile.members) {
        if (!m.mandatory_zone || !m.travels) continue;
        if (!is_workday(ctx.day, tuning_.weekend_pattern)) continue;
        const int zone = *m.mandatory_zone;
        const int start = m.mandatory_window->start_minute;
        const int end = m.mandatory_window->end_minute;
        auto routes = enumerate_routes(network_, ctx.profile.home_zone, zone, 4);
        if (routes.empty()) continue;
        const int fft = static_cast<int>(std::lround(free_flow_time(network_, routes.front())));

        DeclaredTrip* covering = nullptr;
        for (auto& t : fixed.declared_trips) {
            if (t.member == m.member && t.dest_zone == zone) {
                covering = &t;
                break;
            }
        }
        if (!covering) {
            DeclaredTrip out;
            out.member = m.member;
            out.purpose = network_.zone(zone).kind == ZoneKind::school ? std::string("school")
                                                                       : std::string("work");
            out.origin_zone = ctx.profile.home_zone;
            out.dest_zone = zone;
            out.departure_minute = start - fft;
            out.route_links = routes.front();
            fixed.declared_trips.push_back(out);

            auto back_routes = enumerate_routes(network_, zone, ctx.profile.home_zone, 4);
            if (!back_routes.empty()) {
                DeclaredTrip back;
                back.member = m.member;
                back.purpose = out.purpose + " return";
                back.origin_zone = zone;
                back.dest_zone = ctx.profile.home_zone;
                back.departure_minute = end;
                back.route_links = back_routes.front();
                fixed.declared_trips.push_back(back);
            }
        } else if (covering->departure_minute + fft > start) {
            covering->departure_minute = start - fft;  // infeasible_timing
        }
    }

    // Per-member overlaps: push the later trip after the earlier's expected
    // arrival (free-flow estimate).
    std::stable_sort(fixed.declared_trips.begin(), fixed.declared_trips.end(),
                     [](const DeclaredTrip& a, const DeclaredTrip& b) {
                         if (a.member != b.member) return a.member < b.member;
                         return a.departure_minute < b.departure_minute;
                     });
    for (size_t i = 0; i + 1 < fixed.declared_trips.size(); ++i) {
        DeclaredTrip& cur = fixed.declared_trips[i];
        DeclaredTrip& nxt = fixed.declared_trips[i + 1];
        if (cur.member != nxt.member) continue;
        const int fft = static_cast<int>(
            std::lround(free_flow_time(network_, cur.route_links.value_or(std::vector<int>{}))));
        const int arrival = cur.departure_minute + fft;
        if (nxt.departure_minute < arrival) nxt.departure_minute = arrival;
    }

    fixed.declared_count = static_cast<int>(fixed.declared_trips.size());
    fixed.narrative = draft.narrative + " (revised: " + std::to_string(findings.size()) +
                      " finding" + (findings.size() == 1 ? "" : "s") + " addressed)";
    return fixed;
}

std::vector<PlannedTrip> OracleCore::format_trips(const PlanDraft& draft,
                                                  const DecisionContext& ctx) {
    std::vector<PlannedTrip> out;
    char id[32];
    for (size_t i = 0; i < draft.declared_trips.size(); ++i) {
        const DeclaredTrip& d = draft.declared_trips[i];
        if (!network_.has_zone(d.origin_zone) || !network_.has_zone(d.dest_zone) ||
            d.origin_zone == d.dest_zone) {
            continue;  // unusable endpoints cannot be healed into a loadable trip
        }
        std::vector<int> route;
        if (d.route_links) route = *d.route_links;
        bool valid = !route.empty();
        if (valid) {
            try {
                int at = d.origin_zone;
                for (int link_id : route) {
                    const Link& l = network_.link(link_id);
                    if (l.origin_zone != at) {
                        valid = false;
                        break;
                    }
                    at = l.dest_zone;
                }
                valid = valid && at == d.dest_zone;
            } catch (const ConfigError&) {
                valid = false;
            }
        }
        if (!valid) {
            auto routes = enumerate_routes(network_, d.origin_zone, d.dest_zone, 4);
            if (routes.empty()) continue;
            route = routes.front();
        }
        PlannedTrip t;
        std::snprintf(id, sizeof(id), "a%02d-d%02d-t%02d", ctx.profile.agent_id, ctx.day,
                      static_cast<int>(i + 1));
        t.trip_id = id;
        t.member = d.member;
        t.purpose = d.purpose;
        t.origin_zone = d.origin_zone;
        t.dest_zone = d.dest_zone;
        t.departure_minute = d.departure_minute;
        t.route_links = route;
        t.expected_arrival_minute =
            d.departure_minute + static_cast<int>(std::lround(free_flow_time(network_, route)));
        out.push_back(std::move(t));
    }
    return out;
}

Reflection OracleCore::reflect(const std::vector<TripOutcome>& outcomes,
                               const std::vector<Activity>& performed,
                               const std::vector<PlannedTrip>& trips,
                               const DecisionContext& ctx) {
    Reflection r;
    for (const auto& a : performed) {
        r.activity_records.push_back({ctx.day, render_activity_text(ctx.day, a)});
    }
    for (const auto& o : outcomes) {
        const PlannedTrip* trip = nullptr;
        for (const auto& t : trips) {
            if (t.trip_id == o.trip_id) {
                trip = &t;
                break;
            }
        }
        if (!trip) continue;
        TravelRecord rec;
        rec.day = ctx.day;
        rec.member = trip->member;
        rec.purpose = trip->purpose;
        rec.origin_zone = trip->origin_zone;
        rec.dest_zone = trip->dest_zone;
        rec.route_links = trip->route_links;
        rec.departure_minute = o.actual_departure_minute;
        rec.expected_arrival_minute = trip->expected_arrival_minute;
        rec.actual_arrival_minute = o.actual_arrival_minute;
        rec.travel_minutes = o.travel_minutes;
        rec.rendered_text = render_travel_record(rec);
        r.travel_records.push_back(std::move(rec));
    }
    return r;
}

}  // namespace

std::unique_ptr<DecisionCore> make_oracle_core(const Network& network, OracleTuning tuning) {
    return std::make_unique<OracleCore>(network, tuning);
}

}  // namespace tripweaver
