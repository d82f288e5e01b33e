#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>

#include "nlohmann/json.hpp"
#include "tripweaver/cores.hpp"
#include "tripweaver/json_io.hpp"
#include "tripweaver/llm_client.hpp"
#include "tripweaver/memory.hpp"
#include "tripweaver/prompts.hpp"
#include "tripweaver/traffic.hpp"

namespace tripweaver {
namespace {

using nlohmann::json;

// Returns the contents of the first fenced code block (``` or ```json).
std::string extract_fenced_block(const std::string& text) {
    const std::string fence = "```";
    auto open = text.find(fence);
    if (open == std::string::npos) {
        throw LlmError("no fenced code block found in reply");
    }
    auto body_start = text.find('\n', open);
    if (body_start == std::string::npos) {
        throw LlmError("fenced code block is not terminated");
    }
    ++body_start;
    auto close = text.find(fence, body_start);
    if (close == std::string::npos) {
        throw LlmError("fenced code block is not terminated");
    }
    return text.substr(body_start, close - body_start);
}

json parse_block(const std::string& reply) {
    const std::string block = extract_fenced_block(reply);
    try {
        return json::parse(block);
    } catch (const json::exception& e) {
        throw LlmError(std::string("fenced block is not valid json: ") + e.what());
    }
}

const json& require(const json& obj, const char* key, json::value_t type, const char* where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw LlmError(std::string(where) + ": missing key '" + key + "'");
    }
    const json& value = obj.at(key);
    const bool numeric_ok =
        type == json::value_t::number_integer &&
        (value.is_number_integer() || value.is_number_unsigned());
    if (value.type() != type && !numeric_ok) {
        throw LlmError(std::string(where) + ": key '" + key + "' has wrong type");
    }
    return value;
}

int require_int(const json& obj, const char* key, const char* where) {
    return require(obj, key, json::value_t::number_integer, where).get<int>();
}

std::string require_str(const json& obj, const char* key, const char* where) {
    return require(obj, key, json::value_t::string, where).get<std::string>();
}

std::vector<std::string> require_str_array(const json& obj, const char* key, const char* where) {
    const json& arr = require(obj, key, json::value_t::array, where);
    std::vector<std::string> out;
    for (const auto& item : arr) {
        if (!item.is_string()) {
            throw LlmError(std::string(where) + ": '" + key + "' must be an array of strings");
        }
        out.push_back(item.get<std::string>());
    }
    if (out.empty()) {
        throw LlmError(std::string(where) + ": '" + key + "' must not be empty");
    }
    return out;
}

std::optional<std::vector<int>> optional_int_array(const json& obj, const char* key,
                                                   const char* where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const json& arr = obj.at(key);
    if (!arr.is_array()) {
        throw LlmError(std::string(where) + ": '" + key + "' must be an array of ints or null");
    }
    std::vector<int> out;
    for (const auto& item : arr) {
        if (!item.is_number_integer() && !item.is_number_unsigned()) {
            throw LlmError(std::string(where) + ": '" + key + "' must contain only integers");
        }
        out.push_back(item.get<int>());
    }
    return out;
}

class LlmCore final : public DecisionCore {
public:
    LlmCore(const Network& network, LlmSettings settings, std::shared_ptr<LlmClient> client)
        : network_(network), settings_(std::move(settings)), client_(std::move(client)) {}

    std::vector<Activity> generate_activities(const DecisionContext& ctx) override {
        const json reply = call_stage(Stage::activities, ctx, json());
        return parse_activities(reply, ctx);
    }

    std::vector<Tour> build_tours(const std::vector<Activity>& activities,
                                  const DecisionContext& ctx) override {
        json input{{"activities", activities}};
        const json reply = call_stage(Stage::tours, ctx, input,
                                      [&](const json& j) { parse_tours(j, activities, ctx); });
        return parse_tours(reply, activities, ctx);
    }

    PlanDraft plan_trips(const std::vector<Tour>& tours, const DecisionContext& ctx) override {
        json input{{"tours", tours}};
        const json reply =
            call_stage(Stage::trips, ctx, input, [&](const json& j) { parse_draft(j); });
        return parse_draft(reply);
    }

    PlanDraft self_correct(const PlanDraft& draft, const std::vector<ValidationFinding>& findings,
                           const DecisionContext& ctx) override {
        json input{{"draft", draft}, {"findings", findings}};
        const json reply =
            call_stage(Stage::self_correct, ctx, input, [&](const json& j) { parse_draft(j); });
        return parse_draft(reply);
    }

    std::vector<PlannedTrip> format_trips(const PlanDraft& draft,
                                          const DecisionContext& ctx) override {
        json input{{"draft", draft}};
        json reply;
        try {
            reply = call_stage(Stage::format, ctx, input, [&](const json& j) {
                require(j, "trips", json::value_t::array, "format");
            });
        } catch (const LlmError&) {
            // Degrade instead of failing the day: an unusable format reply
            // means every declared trip is dropped (and counted as missed).
            return {};
        }
        return salvage_formatted(reply, draft, ctx);
    }

    Reflection reflect(const std::vector<TripOutcome>& outcomes,
                       const std::vector<Activity>& performed,
                       const std::vector<PlannedTrip>& trips,
                       const DecisionContext& ctx) override {
        // Factual records are always template-rendered from the actual
        // outcomes; the model only contributes optional insight notes, so a
        // reflect failure never blocks the day.
        Reflection reflection = template_reflection(outcomes, performed, trips, ctx);
        json input{{"trips", trips}, {"outcomes", outcomes}, {"activities", performed}};
        try {
            const json reply = call_stage(Stage::reflect, ctx, input, [](const json& j) {
                if (!j.is_object() || !j.contains("insights") || !j.at("insights").is_array()) {
                    throw LlmError("reflect: reply must be {\"insights\": [str]}");
                }
            });
            for (const auto& item : reply.at("insights")) {
                if (!item.is_string()) continue;
                const std::string text = item.get<std::string>();
                if (text.empty()) continue;
                ActivityRecord note;
                note.day = ctx.day;
                note.text = "Day " + std::to_string(ctx.day) + " insight: " + text;
                reflection.activity_records.push_back(note);
            }
        } catch (const LlmError&) {
            // keep the template-only reflection
        }
        return reflection;
    }

private:
    // One stage round-trip with the shared retry loop: send, extract the
    // fenced block, parse, run `check`; on failure append the error and ask
    // again, up to max_retries attempts in total.
    json call_stage(Stage stage, const DecisionContext& ctx, const json& input,
                    std::function<void(const json&)> check = {}) {
        PromptBundle bundle = build_prompt(stage, ctx, input);
        const int attempts = std::max(1, settings_.max_retries);
        std::string last_error;
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            if (ctx.trace) ctx.trace->attempts = attempt;
            std::string reply_text;
            try {
                reply_text = client_->complete(bundle.messages, bundle.user_tag);
            } catch (const LlmError& e) {
                // transport-level retries already happened inside the client
                if (ctx.trace) {
                    ctx.trace->ok = false;
                    ctx.trace->error = e.what();
                }
                throw;
            }
            try {
                json parsed = parse_block(reply_text);
                if (check) check(parsed);
                if (ctx.trace) {
                    ctx.trace->ok = true;
                    ctx.trace->error.clear();
                }
                return parsed;
            } catch (const LlmError& e) {
                last_error = e.what();
                bundle.messages.push_back({"assistant", reply_text});
                bundle.messages.push_back(
                    {"user", "Your previous reply was invalid: " + last_error +
                                 ". Reply again. " + stage_schema_hint(stage)});
            }
        }
        if (ctx.trace) {
            ctx.trace->ok = false;
            ctx.trace->error = last_error;
        }
        throw LlmError("llm: stage " + std::string(to_string(stage)) + " failed after " +
                       std::to_string(attempts) + " attempt(s): " + last_error);
    }

    std::vector<Activity> parse_activities(const json& reply, const DecisionContext& ctx) const {
        const json& arr = require(reply, "activities", json::value_t::array, "activities");
        std::vector<Activity> out;
        for (const auto& item : arr) {
            Activity act;
            act.name = require_str(item, "name", "activities");
            if (act.name.empty()) throw LlmError("activities: name must not be empty");
            act.member_roles = require_str_array(item, "members", "activities");
            act.kind = activity_kind_from_string(require_str(item, "kind", "activities"));
            if (item.contains("location_zone") && !item.at("location_zone").is_null()) {
                act.location_zone = require_int(item, "location_zone", "activities");
            }
            act.desired_start_minute = require_int(item, "desired_start_minute", "activities");
            act.duration_minutes = require_int(item, "duration_minutes", "activities");
            if (act.desired_start_minute < 0 || act.desired_start_minute >= 24 * 60) {
                throw LlmError("activities: desired_start_minute must be in [0, 1440)");
            }
            if (act.duration_minutes <= 0) {
                throw LlmError("activities: duration_minutes must be positive");
            }
            act.requires_travel =
                act.location_zone.has_value() && *act.location_zone != ctx.profile.home_zone;
            out.push_back(std::move(act));
        }
        return out;
    }

    std::vector<Tour> parse_tours(const json& reply, const std::vector<Activity>& activities,
                                  const DecisionContext& ctx) const {
        const json& arr = require(reply, "tours", json::value_t::array, "tours");
        std::vector<Tour> out;
        for (const auto& item : arr) {
            Tour tour;
            tour.member_roles = require_str_array(item, "members", "tours");
            tour.anchor_zone = ctx.profile.home_zone;
            for (const auto& name : require_str_array(item, "activity_names", "tours")) {
                auto found = std::find_if(activities.begin(), activities.end(),
                                          [&](const Activity& a) { return a.name == name; });
                if (found == activities.end()) {
                    throw LlmError("tours: unknown activity '" + name + "'");
                }
                tour.ordered_activities.push_back(*found);
            }
            out.push_back(std::move(tour));
        }
        return out;
    }

    static PlanDraft parse_draft(const json& reply) {
        PlanDraft draft;
        if (reply.contains("narrative") && reply.at("narrative").is_string()) {
            draft.narrative = reply.at("narrative").get<std::string>();
        }
        const json& arr = require(reply, "trips", json::value_t::array, "trips");
        for (const auto& item : arr) {
            DeclaredTrip trip;
            trip.member = require_str(item, "member", "trips");
            trip.purpose = require_str(item, "purpose", "trips");
            trip.origin_zone = require_int(item, "origin_zone", "trips");
            trip.dest_zone = require_int(item, "dest_zone", "trips");
            trip.departure_minute = require_int(item, "departure_minute", "trips");
            trip.route_links = optional_int_array(item, "route_links", "trips");
            draft.declared_trips.push_back(std::move(trip));
        }
        draft.declared_count = static_cast<int>(draft.declared_trips.size());
        return draft;
    }

    bool route_is_valid(const std::vector<int>& route, int origin, int dest) const {
        if (route.empty()) return false;
        int at = origin;
        for (int link_id : route) {
            if (!network_.has_link(link_id)) return false;
            const Link& link = network_.link(link_id);
            if (link.origin_zone != at) return false;
            at = link.dest_zone;
        }
        return at == dest;
    }

    // Strict per-item conversion: invalid items are dropped (they count as
    // missed trips later), unrouted ones get the first enumerated route.
    std::vector<PlannedTrip> salvage_formatted(const json& reply, const PlanDraft& draft,
                                               const DecisionContext& ctx) const {
        std::vector<PlannedTrip> out;
        const json& arr = reply.at("trips");
        for (const auto& item : arr) {
            if (static_cast<int>(out.size()) >= draft.declared_count) break;
            PlannedTrip trip;
            try {
                trip.member = require_str(item, "member", "format");
                trip.purpose = require_str(item, "purpose", "format");
                trip.origin_zone = require_int(item, "origin_zone", "format");
                trip.dest_zone = require_int(item, "dest_zone", "format");
                trip.departure_minute = require_int(item, "departure_minute", "format");
            } catch (const LlmError&) {
                continue;
            }
            if (!network_.has_zone(trip.origin_zone) || !network_.has_zone(trip.dest_zone) ||
                trip.origin_zone == trip.dest_zone) {
                continue;
            }
            if (trip.departure_minute < 0 || trip.departure_minute >= 24 * 60) continue;

            std::optional<std::vector<int>> route;
            try {
                route = optional_int_array(item, "route_links", "format");
            } catch (const LlmError&) {
                route = std::nullopt;
            }
            if (!route || !route_is_valid(*route, trip.origin_zone, trip.dest_zone)) {
                auto routes = enumerate_routes(network_, trip.origin_zone, trip.dest_zone);
                if (routes.empty() || routes.front().empty()) continue;
                route = routes.front();
            }
            trip.route_links = *route;
            const double fft = free_flow_time(network_, trip.route_links);
            int expected = trip.departure_minute + static_cast<int>(std::lround(fft));
            if (item.contains("expected_arrival_minute") &&
                (item.at("expected_arrival_minute").is_number_integer() ||
                 item.at("expected_arrival_minute").is_number_unsigned())) {
                const int given = item.at("expected_arrival_minute").get<int>();
                if (given >= trip.departure_minute) expected = given;
            }
            trip.expected_arrival_minute = expected;
            char id[32];
            std::snprintf(id, sizeof(id), "a%02d-d%02d-t%02d", ctx.profile.agent_id, ctx.day,
                          static_cast<int>(out.size()) + 1);
            trip.trip_id = id;
            out.push_back(std::move(trip));
        }
        return out;
    }

    Reflection template_reflection(const std::vector<TripOutcome>& outcomes,
                                   const std::vector<Activity>& performed,
                                   const std::vector<PlannedTrip>& trips,
                                   const DecisionContext& ctx) const {
        Reflection reflection;
        for (const auto& activity : performed) {
            ActivityRecord record;
            record.day = ctx.day;
            record.text = render_activity_text(ctx.day, activity);
            reflection.activity_records.push_back(std::move(record));
        }
        for (const auto& outcome : outcomes) {
            auto match = std::find_if(trips.begin(), trips.end(), [&](const PlannedTrip& t) {
                return t.trip_id == outcome.trip_id;
            });
            if (match == trips.end()) continue;
            TravelRecord record;
            record.day = ctx.day;
            record.member = match->member;
            record.purpose = match->purpose;
            record.origin_zone = match->origin_zone;
            record.dest_zone = match->dest_zone;
            record.route_links = match->route_links;
            record.departure_minute = outcome.actual_departure_minute;
            record.expected_arrival_minute = match->expected_arrival_minute;
            record.actual_arrival_minute = outcome.actual_arrival_minute;
            record.travel_minutes = outcome.travel_minutes;
            record.rendered_text = render_travel_record(record);
            reflection.travel_records.push_back(std::move(record));
        }
        return reflection;
    }

    const Network& network_;
    LlmSettings settings_;
    std::shared_ptr<LlmClient> client_;
};

}  // namespace

std::unique_ptr<DecisionCore> make_llm_core(const Network& network, const LlmSettings& settings,
                                            std::shared_ptr<LlmClient> client) {
    if (!client) throw ConfigError("llm core requires a client");
    return std::make_unique<LlmCore>(network, settings, std::move(client));
}

}  // namespace tripweaver
