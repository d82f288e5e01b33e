#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "tripweaver/cores.hpp"
#include "tripweaver/memory.hpp"
#include "tripweaver/pipeline.hpp"
#include "tripweaver/scenario.hpp"
#include "tripweaver/traffic.hpp"

using namespace tripweaver;

namespace {

const char* kScenarioPath = TRIPWEAVER_SOURCE_DIR "/scenarios/paper_scenario.json";

struct Fixture {
    SimulationConfig cfg = load_scenario(kScenarioPath);
    Network network = build_network(cfg.zones, cfg.links);
    const HouseholdProfile& agent(int id) const {
        return cfg.agents[static_cast<size_t>(id - 1)];
    }
};

TripView view(const std::string& label, const std::string& member, int origin, int dest, int dep,
              std::optional<std::vector<int>> route = std::nullopt,
              std::optional<int> expected = std::nullopt) {
    TripView v;
    v.label = label;
    v.member = member;
    v.origin_zone = origin;
    v.dest_zone = dest;
    v.departure_minute = dep;
    v.route_links = std::move(route);
    v.expected_arrival_minute = expected;
    return v;
}

std::vector<TripView> full_coverage_views() {
    return {
        view("t-dad-out", "dad", 1, 3, 420, std::vector<int>{1, 3}, 480),
        view("t-dad-back", "dad", 3, 1, 1020, std::vector<int>{7, 5}, 1080),
        view("t-kid-out", "kid", 1, 2, 460, std::vector<int>{1}, 480),
        view("t-kid-back", "kid", 2, 1, 960, std::vector<int>{5}, 980),
    };
}

// Throws on the very first stage; used to exercise the degraded path.
class BrokenCore : public DecisionCore {
public:
    std::vector<Activity> generate_activities(const DecisionContext&) override {
        throw LlmError("llm: stage activities failed after 3 attempt(s): no fenced code block");
    }
    std::vector<Tour> build_tours(const std::vector<Activity>&, const DecisionContext&) override {
        return {};
    }
    PlanDraft plan_trips(const std::vector<Tour>&, const DecisionContext&) override { return {}; }
    PlanDraft self_correct(const PlanDraft& d, const std::vector<ValidationFinding>&,
                           const DecisionContext&) override {
        return d;
    }
    std::vector<PlannedTrip> format_trips(const PlanDraft&, const DecisionContext&) override {
        return {};
    }
    Reflection reflect(const std::vector<TripOutcome>&, const std::vector<Activity>&,
                       const std::vector<PlannedTrip>&, const DecisionContext&) override {
        return {};
    }
};

// Plans a draft whose first trip departs too late for the work window.
class SloppyPlanner : public BrokenCore {
public:
    std::vector<Activity> generate_activities(const DecisionContext&) override { return {}; }
    PlanDraft plan_trips(const std::vector<Tour>&, const DecisionContext&) override {
        PlanDraft draft;
        auto add = [&](const char* member, const char* purpose, int origin, int dest, int dep,
                       std::vector<int> route) {
            DeclaredTrip t;
            t.member = member;
            t.purpose = purpose;
            t.origin_zone = origin;
            t.dest_zone = dest;
            t.departure_minute = dep;
            t.route_links = std::move(route);
            draft.declared_trips.push_back(std::move(t));
        };
        add("dad", "work", 1, 3, 450, {1, 3});  // arrives 510, window starts 480
        add("dad", "work return", 3, 1, 1020, {7, 5});
        add("kid", "school", 1, 2, 460, {1});
        add("kid", "school return", 2, 1, 960, {5});
        draft.declared_count = 4;
        draft.narrative = "sloppy";
        return draft;
    }
};

}  // namespace

TEST_CASE("validation flags every finding class") {
    Fixture f;
    const auto& profile = f.agent(1);

    SUBCASE("missing mandatory trips, one finding per member") {
        auto findings = validate_plan(std::vector<TripView>{}, profile, f.network, true);
        REQUIRE(findings.size() == 2);
        CHECK(findings[0].code == FindingCode::mandatory_missing);
        CHECK(findings[0].subject == "dad");
        CHECK(findings[0].detail == "no trip to zone 3 for member 'dad'");
        CHECK(findings[1].subject == "kid");

        CHECK(validate_plan(std::vector<TripView>{}, profile, f.network, false).empty());
    }

    SUBCASE("a complete plan is clean") {
        CHECK(validate_plan(full_coverage_views(), profile, f.network, true).empty());
    }

    SUBCASE("unknown links are discontiguous") {
        auto views = full_coverage_views();
        views[2].route_links = std::vector<int>{9};
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].code == FindingCode::route_discontiguous);
        CHECK(findings[0].detail == "unknown link 9");
        CHECK(findings[0].subject == "t-kid-out");
    }

    SUBCASE("broken chains name the offending pair") {
        auto views = full_coverage_views();
        views[0].route_links = std::vector<int>{1, 4};
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(!findings.empty());
        CHECK(findings[0].code == FindingCode::route_discontiguous);
        CHECK(findings[0].detail ==
              "link 1 ends at zone 2 but link 4 starts at zone 4");
    }

    SUBCASE("contiguous routes with wrong endpoints") {
        auto views = full_coverage_views();
        views[0].route_links = std::vector<int>{1};  // runs 1->2, trip is 1->3
        auto findings = validate_plan(views, profile, f.network, true);
        bool found = false;
        for (const auto& fd : findings) {
            if (fd.code != FindingCode::route_wrong_endpoints) continue;
            found = true;
            CHECK(fd.detail == "route runs 1->2 but the trip is 1->3");
        }
        CHECK(found);
    }

    SUBCASE("unreachable zone pairs are reported as missing routes") {
        std::vector<Zone> zones = {{1, ZoneKind::residential, "Home"},
                                   {2, ZoneKind::school, "School"}};
        std::vector<Link> links;
        Link l;
        l.id = 1;
        l.origin_zone = 1;
        l.dest_zone = 2;
        l.free_flow_minutes = 10;
        l.capacity_vph = 60;
        links.push_back(l);
        Network one_way = build_network(zones, links);

        HouseholdProfile lone;
        lone.agent_id = 1;
        lone.home_zone = 1;
        MemberSchedule solo;
        solo.member = "dad";
        lone.members = {solo};

        auto findings = validate_plan(
            std::vector<TripView>{view("t-back", "dad", 2, 1, 600)}, lone, one_way, false);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].code == FindingCode::route_discontiguous);
        CHECK(findings[0].detail == "no route exists from zone 2 to zone 1");
    }

    SUBCASE("mandatory arrivals must be achievable") {
        auto views = full_coverage_views();
        views[0].departure_minute = 450;
        views[0].expected_arrival_minute = 510;
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].code == FindingCode::infeasible_timing);
        CHECK(findings[0].detail.find("arrives no earlier than 510") != std::string::npos);
        CHECK(findings[0].detail.find("window start 480") != std::string::npos);
    }

    SUBCASE("a member cannot be on two trips at once") {
        auto views = full_coverage_views();
        views[3].departure_minute = 470;  // kid departs back before arriving at 480
        views[3].expected_arrival_minute = 490;
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].code == FindingCode::overlapping_trips);
        CHECK(findings[0].subject == "kid");
        CHECK(findings[0].detail.find("'t-kid-out' is still under way at 480") !=
              std::string::npos);
        CHECK(findings[0].detail.find("'t-kid-back' departs at 470") != std::string::npos);
    }

    SUBCASE("bad zones") {
        auto views = full_coverage_views();
        views.push_back(view("t-bad", "mom", 9, 4, 600));
        views.push_back(view("t-loop", "mom", 4, 4, 700));
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(findings.size() == 2);
        CHECK(findings[0].code == FindingCode::bad_zone);
        CHECK(findings[0].detail == "unknown zone 9");
        CHECK(findings[1].detail == "origin equals destination (zone 4)");
    }

    SUBCASE("expected arrivals cannot beat free flow") {
        auto views = full_coverage_views();
        views[2].expected_arrival_minute = 470;  // free flow needs 480
        auto findings = validate_plan(views, profile, f.network, true);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].code == FindingCode::late_expectation);
        CHECK(findings[0].detail ==
              "expected arrival 470 is before the earliest possible 480");
    }

    SUBCASE("findings come out grouped in a fixed code order") {
        std::vector<TripView> views = {
            view("t-kid-out", "kid", 1, 2, 460, std::vector<int>{1}, 470),  // late expectation
            view("t-bad", "mom", 9, 4, 600),                                // bad zone
        };
        auto findings = validate_plan(views, profile, f.network, true);  // dad missing too
        REQUIRE(findings.size() == 3);
        CHECK(findings[0].code == FindingCode::mandatory_missing);
        CHECK(findings[1].code == FindingCode::bad_zone);
        CHECK(findings[2].code == FindingCode::late_expectation);
    }

    SUBCASE("draft views are labeled member/purpose#index") {
        PlanDraft draft;
        DeclaredTrip t;
        t.member = "mom";
        t.purpose = "errand";
        t.origin_zone = 4;
        t.dest_zone = 4;
        t.departure_minute = 600;
        draft.declared_trips.push_back(t);
        draft.declared_count = 1;
        auto findings = validate_plan(draft, profile, f.network, false);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].subject == "mom/errand#1");
    }

    SUBCASE("formatted views are labeled by trip id") {
        PlannedTrip t;
        t.trip_id = "a01-d01-t01";
        t.member = "mom";
        t.purpose = "errand";
        t.origin_zone = 4;
        t.dest_zone = 4;
        t.departure_minute = 600;
        t.expected_arrival_minute = 620;
        auto findings =
            validate_plan(std::vector<PlannedTrip>{t}, profile, f.network, false);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].subject == "a01-d01-t01");
    }
}

TEST_CASE("a clean oracle day runs all stages once") {
    Fixture f;
    OracleTuning quiet;
    quiet.recreation_probability = 0.0;
    auto oracle = make_oracle_core(f.network, quiet);
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.assignment = f.cfg.stage_cores;

    MemoryStore memory;
    auto log = run_agent_day(f.agent(1), 1, memory, cores, f.cfg, f.network);

    CHECK(log.agent_id == 1);
    CHECK(log.day == 1);
    CHECK(log.failed_stage.empty());
    CHECK(log.activities.size() == 2);
    CHECK(log.tours.size() == 2);
    REQUIRE(log.drafts.size() == 1);
    CHECK(log.declared_count == 4);
    CHECK(log.formatted_count == 4);
    REQUIRE(log.planned_trips.size() == 4);
    CHECK(log.planned_trips[0].trip_id == "a01-d01-t01");

    REQUIRE(log.stage_runs.size() == 4);  // no self-correction needed
    CHECK(log.stage_runs[0].stage == "activities");
    CHECK(log.stage_runs[1].stage == "tours");
    CHECK(log.stage_runs[2].stage == "trips");
    CHECK(log.stage_runs[3].stage == "format");
    for (const auto& run : log.stage_runs) {
        CHECK(run.trace.ok);
        CHECK(run.trace.attempts == 1);
    }

    REQUIRE(log.findings.size() == 2);  // post-draft and post-format
    CHECK(log.findings[0].empty());
    CHECK(log.findings[1].empty());
}

TEST_CASE("a bad draft is repaired within the self-correction budget") {
    Fixture f;
    auto oracle = make_oracle_core(f.network);
    SloppyPlanner planner;
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.llm = &planner;  // stand-in: only the trips stage is routed here
    cores.assignment = f.cfg.stage_cores;
    cores.assignment[Stage::activities] = CoreId::llm;  // empty activities, quiet day
    cores.assignment[Stage::trips] = CoreId::llm;

    MemoryStore memory;
    auto log = run_agent_day(f.agent(1), 1, memory, cores, f.cfg, f.network);

    CHECK(log.failed_stage.empty());
    REQUIRE(log.drafts.size() == 2);  // initial + one revision
    REQUIRE(log.findings.size() == 3);
    CHECK(log.findings[0].size() == 1);
    CHECK(log.findings[0][0].code == FindingCode::infeasible_timing);
    CHECK(log.findings[1].empty());
    CHECK(log.findings[2].empty());

    REQUIRE(log.stage_runs.size() == 5);
    CHECK(log.stage_runs[3].stage == "self_correct");

    REQUIRE(log.planned_trips.size() == 4);
    CHECK(log.planned_trips[0].member == "dad");
    CHECK(log.planned_trips[0].departure_minute == 420);  // re-seated to make 480
}

TEST_CASE("an unrecoverable stage failure degrades to a zero-trip day") {
    Fixture f;
    auto oracle = make_oracle_core(f.network);
    BrokenCore broken;
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.llm = &broken;
    cores.assignment = f.cfg.stage_cores;
    cores.assignment[Stage::activities] = CoreId::llm;

    MemoryStore memory;
    auto log = run_agent_day(f.agent(1), 1, memory, cores, f.cfg, f.network);

    CHECK(log.failed_stage == "activities");
    CHECK(log.planned_trips.empty());
    CHECK(log.formatted_count == 0);
    REQUIRE(log.stage_runs.size() == 1);
    CHECK(log.stage_runs[0].stage == "activities");
}

TEST_CASE("the llm assignment requires a configured llm core") {
    Fixture f;
    auto oracle = make_oracle_core(f.network);
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.assignment[Stage::trips] = CoreId::llm;
    CHECK_THROWS_WITH_AS(cores.for_stage(Stage::trips),
                         "stage trips is assigned to the llm core but none is configured",
                         ConfigError);
    CHECK_NOTHROW(cores.for_stage(Stage::activities));
}

TEST_CASE("context assembly renders memory newest first with summaries trailing") {
    Fixture f;
    MemoryStore memory;
    for (int day = 1; day <= 3; ++day) {
        ActivityRecord a;
        a.day = day;
        a.text = "Day " + std::to_string(day) + ": activity note.";
        append_record(memory, a);

        TravelRecord t;
        t.day = day;
        t.member = "dad";
        t.purpose = "work";
        t.origin_zone = 1;
        t.dest_zone = 3;
        t.route_links = {1, 3};
        t.departure_minute = 420;
        t.expected_arrival_minute = 480;
        t.actual_arrival_minute = 480 + day;
        t.travel_minutes = 60 + day;
        append_record(memory, t);  // rendered_text left empty on purpose
    }
    compact(memory, 1, template_rollup);

    auto ctx = make_context(f.agent(1), 4, memory, f.cfg, f.network);
    CHECK(ctx.day == 4);
    CHECK(ctx.rng_seed == derive_rng_seed(f.cfg.seed, 1, 4));
    CHECK(!ctx.network_brief.empty());

    REQUIRE(ctx.retrieved_activity_memory.size() == 3);  // days 3,2 then the summary
    CHECK(ctx.retrieved_activity_memory[0] == "Day 3: activity note.");
    CHECK(ctx.retrieved_activity_memory[1] == "Day 2: activity note.");
    CHECK(ctx.retrieved_activity_memory[2].rfind("Summary of days 1-1: ", 0) == 0);

    REQUIRE(ctx.retrieved_travel_memory.size() == 3);
    // Unrendered records are rendered on the fly.
    CHECK(ctx.retrieved_travel_memory[0].rfind("Day 3: dad traveled 1→3", 0) == 0);
    CHECK(ctx.retrieved_travel_memory[2].rfind("Summary of days 1-1: ", 0) == 0);
}

TEST_CASE("feedback appends reflection records and compacts on schedule") {
    Fixture f;
    f.cfg.memory_compact_after_days = 2;
    f.cfg.memory_window_days = 1;
    auto oracle = make_oracle_core(f.network);
    CoreSet cores;
    cores.oracle = oracle.get();
    cores.assignment = f.cfg.stage_cores;

    MemoryStore memory;
    ActivityRecord seed_note;
    seed_note.day = 1;
    seed_note.text = "Day 1: seeded note.";
    append_record(memory, seed_note);

    AgentDayLog log;
    log.agent_id = 1;
    log.day = 2;
    Activity work;
    work.name = "work";
    work.member_roles = {"dad"};
    work.kind = ActivityKind::mandatory;
    work.location_zone = 3;
    work.desired_start_minute = 480;
    work.duration_minutes = 540;
    work.requires_travel = true;
    log.activities = {work};

    PlannedTrip trip;
    trip.trip_id = "a01-d02-t01";
    trip.member = "dad";
    trip.purpose = "work";
    trip.origin_zone = 1;
    trip.dest_zone = 3;
    trip.departure_minute = 420;
    trip.route_links = {1, 3};
    trip.expected_arrival_minute = 480;
    log.planned_trips = {trip};

    TripOutcome outcome;
    outcome.trip_id = "a01-d02-t01";
    outcome.actual_departure_minute = 420.0;
    outcome.actual_arrival_minute = 483.0;
    outcome.travel_minutes = 63.0;

    apply_feedback(memory, log, {outcome}, cores, f.cfg, f.network, f.agent(1));

    REQUIRE(memory.activity.size() == 2);
    CHECK(memory.activity[1].day == 2);
    REQUIRE(memory.travel.size() == 1);
    CHECK(memory.travel[0].rendered_text.find("late by 3 min") != std::string::npos);

    // day 2 % 2 == 0 and through = 2 - 1 = 1: day one is folded away.
    REQUIRE(memory.long_term.size() == 1);
    CHECK(memory.long_term[0].through_day == 1);
}
