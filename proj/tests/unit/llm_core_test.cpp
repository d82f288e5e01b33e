#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "tripweaver/cores.hpp"
#include "tripweaver/llm_client.hpp"
#include "tripweaver/scenario.hpp"
#include "tripweaver/traffic.hpp"

using namespace tripweaver;

namespace {

const char* kScenarioPath = TRIPWEAVER_SOURCE_DIR "/scenarios/paper_scenario.json";

// Test double that replays canned replies and records every request.
class ScriptedClient : public LlmClient {
public:
    struct Call {
        std::vector<ChatMessage> messages;
        std::string tag;
    };

    ScriptedClient(LlmSettings settings, std::vector<std::string> replies)
        : LlmClient(std::move(settings), nullptr), replies_(std::move(replies)) {}

    std::string complete(const std::vector<ChatMessage>& messages,
                         const std::string& user_tag) override {
        calls.push_back({messages, user_tag});
        if (next_ >= replies_.size()) {
            throw LlmError("llm: scripted client ran out of replies");
        }
        return replies_[next_++];
    }

    std::vector<Call> calls;

private:
    std::vector<std::string> replies_;
    size_t next_ = 0;
};

struct Fixture {
    SimulationConfig cfg = load_scenario(kScenarioPath);
    Network network = build_network(cfg.zones, cfg.links);
    StageTrace trace;

    DecisionContext ctx_for(int agent_id, int day) {
        DecisionContext ctx;
        ctx.profile = cfg.agents[static_cast<size_t>(agent_id - 1)];
        ctx.day = day;
        ctx.rng_seed = derive_rng_seed(cfg.seed, agent_id, day);
        ctx.trace = &trace;
        return ctx;
    }

    std::unique_ptr<DecisionCore> core_with(std::shared_ptr<ScriptedClient> client) const {
        return make_llm_core(network, cfg.llm, std::move(client));
    }
};

const char* kActivitiesReply ="Here is the plan.\n"
    "```json\n"
    "{\"activities\": [{\"name\": \"work\", \"members\": [\"dad\"], \"kind\": \"mandatory\","
    " \"location_zone\": 3, \"desired_start_minute\": 480, \"duration_minutes\": 540}]}\n"
    "```\n";

}  // namespace

TEST_CASE("activities parse from the first fenced block") {
    Fixture f;
    auto client = std::make_shared<ScriptedClient>(f.cfg.llm,
                                                   std::vector<std::string>{kActivitiesReply});
    auto core = f.core_with(client);

    auto acts = core->generate_activities(f.ctx_for(1, 1));
    REQUIRE(acts.size() == 1);
    CHECK(acts[0].name == "work");
    CHECK(acts[0].kind == ActivityKind::mandatory);
    CHECK(acts[0].location_zone == 3);
    CHECK(acts[0].requires_travel);  // derived, not taken from the reply
    CHECK(f.trace.attempts == 1);
    CHECK(f.trace.ok);
    REQUIRE(client->calls.size() == 1);
    CHECK(client->calls[0].tag == "agent=1;day=1;stage=activities");
    REQUIRE(client->calls[0].messages.size() >= 2);
    CHECK(client->calls[0].messages[0].role == "system");
    CHECK(client->calls[0].messages[1].role == "user");
}

TEST_CASE("an invalid reply is retried with a correction message") {
    Fixture f;
    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm, std::vector<std::string>{"I cannot answer in JSON today.", kActivitiesReply});
    auto core = f.core_with(client);

    auto acts = core->generate_activities(f.ctx_for(1, 1));
    CHECK(acts.size() == 1);
    CHECK(f.trace.attempts == 2);
    CHECK(f.trace.ok);
    REQUIRE(client->calls.size() == 2);
    // The retry carries the failed reply plus a correction instruction.
    const auto& retry = client->calls[1].messages;
    REQUIRE(retry.size() == client->calls[0].messages.size() + 2);
    CHECK(retry[retry.size() - 2].role == "assistant");
    CHECK(retry[retry.size() - 2].content == "I cannot answer in JSON today.");
    CHECK(retry.back().role == "user");
    CHECK(retry.back().content.find("Your previous reply was invalid") != std::string::npos);
}

TEST_CASE("a stage fails after exhausting the retry budget") {
    Fixture f;
    f.cfg.llm.max_retries = 2;
    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm, std::vector<std::string>{"nope", "still nope"});
    auto core = f.core_with(client);

    CHECK_THROWS_AS(core->generate_activities(f.ctx_for(1, 1)), LlmError);
    CHECK(client->calls.size() == 2);
    CHECK(f.trace.attempts == 2);
    CHECK_FALSE(f.trace.ok);
    CHECK(!f.trace.error.empty());
}

TEST_CASE("tours must reference generated activities by name") {
    Fixture f;
    std::vector<Activity> acts;
    Activity work;
    work.name = "work";
    work.member_roles = {"dad"};
    work.kind = ActivityKind::mandatory;
    work.location_zone = 3;
    work.desired_start_minute = 480;
    work.duration_minutes = 540;
    work.requires_travel = true;
    acts.push_back(work);

    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm,
        std::vector<std::string>{
            "```json\n{\"tours\": [{\"members\": [\"dad\"], \"activity_names\": [\"wrk\"]}]}\n```",
            "```json\n{\"tours\": [{\"members\": [\"dad\"], \"activity_names\": [\"work\"]}]}\n```",
        });
    auto core = f.core_with(client);

    auto tours = core->build_tours(acts, f.ctx_for(1, 1));
    REQUIRE(tours.size() == 1);
    CHECK(tours[0].anchor_zone == 1);
    REQUIRE(tours[0].ordered_activities.size() == 1);
    CHECK(tours[0].ordered_activities[0].name == "work");
    CHECK(f.trace.attempts == 2);
    CHECK(client->calls[1].messages.back().content.find("unknown activity 'wrk'") !=
          std::string::npos);
}

TEST_CASE("format salvages valid items and heals routes") {
    Fixture f;
    PlanDraft draft;
    draft.declared_count = 3;

    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm,
        std::vector<std::string>{
            "```json\n"
            "{\"trips\": ["
            "{\"member\": \"dad\", \"purpose\": \"work\", \"origin_zone\": 1, \"dest_zone\": 3,"
            " \"departure_minute\": 420, \"route_links\": [9, 9],"
            " \"expected_arrival_minute\": 475},"
            "{\"member\": \"kid\", \"purpose\": \"school\", \"origin_zone\": 1, \"dest_zone\": 2,"
            " \"departure_minute\": 460},"
            "{\"member\": \"mom\", \"purpose\": \"loop\", \"origin_zone\": 1, \"dest_zone\": 1,"
            " \"departure_minute\": 600},"
            "{\"member\": \"mom\", \"purpose\": \"errand\", \"origin_zone\": 1, \"dest_zone\": 4,"
            " \"departure_minute\": 700, \"expected_arrival_minute\": 400}"
            "]}\n```"});
    auto core = f.core_with(client);

    auto trips = core->format_trips(draft, f.ctx_for(1, 1));
    REQUIRE(trips.size() == 3);

    // Unknown links were healed to the first enumerated route; the declared
    // expected arrival is kept because it is not before the departure.
    CHECK(trips[0].trip_id == "a01-d01-t01");
    CHECK(trips[0].route_links == std::vector<int>{1, 3});
    CHECK(trips[0].expected_arrival_minute == 475);

    // Absent route: first enumerated; expected arrival derived as free flow.
    CHECK(trips[1].trip_id == "a01-d01-t02");
    CHECK(trips[1].route_links == std::vector<int>{1});
    CHECK(trips[1].expected_arrival_minute == 480);

    // The zero-length trip was dropped; the last item filled the freed slot,
    // and its impossible expected arrival was replaced by the derived one.
    CHECK(trips[2].trip_id == "a01-d01-t03");
    CHECK(trips[2].member == "mom");
    CHECK(trips[2].purpose == "errand");
    CHECK(trips[2].expected_arrival_minute == 720);
}

TEST_CASE("format caps output at the declared count") {
    Fixture f;
    PlanDraft draft;
    draft.declared_count = 1;
    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm,
        std::vector<std::string>{
            "```json\n{\"trips\": ["
            "{\"member\": \"dad\", \"purpose\": \"work\", \"origin_zone\": 1, \"dest_zone\": 3,"
            " \"departure_minute\": 420},"
            "{\"member\": \"dad\", \"purpose\": \"extra\", \"origin_zone\": 3, \"dest_zone\": 1,"
            " \"departure_minute\": 1020}"
            "]}\n```"});
    auto core = f.core_with(client);
    auto trips = core->format_trips(draft, f.ctx_for(1, 1));
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].purpose == "work");
}

TEST_CASE("format degrades to an empty day when the reply never parses") {
    Fixture f;
    f.cfg.llm.max_retries = 2;
    PlanDraft draft;
    draft.declared_count = 4;
    auto client = std::make_shared<ScriptedClient>(
        f.cfg.llm, std::vector<std::string>{"no fence", "still no fence"});
    auto core = f.core_with(client);

    std::vector<PlannedTrip> trips;
    CHECK_NOTHROW(trips = core->format_trips(draft, f.ctx_for(1, 1)));
    CHECK(trips.empty());
    CHECK_FALSE(f.trace.ok);
    CHECK(f.trace.attempts == 2);
}

TEST_CASE("reflect always returns the template records") {
    Fixture f;
    f.cfg.llm.max_retries = 1;

    Activity work;
    work.name = "work";
    work.member_roles = {"dad"};
    work.kind = ActivityKind::mandatory;
    work.location_zone = 3;
    work.desired_start_minute = 480;
    work.duration_minutes = 540;

    PlannedTrip trip;
    trip.trip_id = "a01-d02-t01";
    trip.member = "dad";
    trip.purpose = "work";
    trip.origin_zone = 1;
    trip.dest_zone = 3;
    trip.departure_minute = 420;
    trip.route_links = {1, 3};
    trip.expected_arrival_minute = 480;

    TripOutcome outcome;
    outcome.trip_id = "a01-d02-t01";
    outcome.actual_departure_minute = 420;
    outcome.actual_arrival_minute = 487;
    outcome.travel_minutes = 67;

    SUBCASE("an unusable reply keeps the template-only reflection") {
        auto client = std::make_shared<ScriptedClient>(f.cfg.llm,
                                                       std::vector<std::string>{"not json"});
        auto core = f.core_with(client);
        auto r = core->reflect({outcome}, {work}, {trip}, f.ctx_for(1, 2));
        REQUIRE(r.activity_records.size() == 1);
        REQUIRE(r.travel_records.size() == 1);
        CHECK(r.travel_records[0].rendered_text.find("late by 7 min") != std::string::npos);
    }

    SUBCASE("insights are appended as dated notes; empty ones are skipped") {
        auto client = std::make_shared<ScriptedClient>(
            f.cfg.llm,
            std::vector<std::string>{
                "```json\n{\"insights\": [\"Leave a few minutes earlier tomorrow.\", \"\"]}\n```"});
        auto core = f.core_with(client);
        auto r = core->reflect({outcome}, {work}, {trip}, f.ctx_for(1, 2));
        REQUIRE(r.activity_records.size() == 2);
        CHECK(r.activity_records[1].text ==
              "Day 2 insight: Leave a few minutes earlier tomorrow.");
        CHECK(r.activity_records[1].day == 2);
    }
}

TEST_CASE("the llm core refuses to exist without a client") {
    Fixture f;
    CHECK_THROWS_AS(make_llm_core(f.network, f.cfg.llm, nullptr), ConfigError);
}
