#include "tripweaver/prompts.hpp"

#include <sstream>

namespace tripweaver {
namespace {

const char* stage_task(Stage stage) {
    switch (stage) {
        case Stage::activities:
            return "Decide which activities the household performs today. Always include "
                   "every mandatory work/school activity listed in the household identity on "
                   "workdays. Add maintenance activities (such as grocery shopping) when the "
                   "household is due for one, and discretionary activities (such as "
                   "recreation) when the household traits or your judgement call for them.";
        case Stage::tours:
            return "Group today's activities that require travel into tours. A tour starts "
                   "and ends at the home zone and lists the activities it covers in order. "
                   "Activities performed at home need no tour.";
        case Stage::trips:
            return "Turn the tours into a trip plan. For every activity away from home the "
                   "traveling member needs an outbound trip arriving before the activity "
                   "starts and a return trip after it ends. Choose departure times from "
                   "your past travel experience: if you arrived late recently, leave "
                   "earlier; if you arrived needlessly early, leave a little later. You may "
                   "propose an explicit route as a list of link ids, or omit it.";
        case Stage::self_correct:
            return "Your draft plan was checked and problems were found. Produce a revised "
                   "plan that fixes every finding while keeping the rest of the plan "
                   "unchanged.";
        case Stage::format:
            return "Convert the final draft into the strict trip table. Every trip must "
                   "carry a route (list of link ids forming a path from origin to "
                   "destination) and an expected arrival minute.";
        case Stage::reflect:
            return "Summarise today's outcomes as short memory notes the household will "
                   "reuse on later days. Optionally add one or two insight sentences about "
                   "what to change.";
    }
    return "";
}

void append_list(std::ostringstream& out, const char* title,
                 const std::vector<std::string>& items) {
    out << title << "\n";
    if (items.empty()) {
        out << "(none)\n";
        return;
    }
    for (const auto& item : items) out << "- " << item << "\n";
}

}  // namespace

std::string user_tag_for(int agent_id, int day, Stage stage) {
    return "agent=" + std::to_string(agent_id) + ";day=" + std::to_string(day) +
           ";stage=" + to_string(stage);
}

std::string stage_schema_hint(Stage stage) {
    std::string shape;
    switch (stage) {
        case Stage::activities:
            shape =
                "{\"activities\": [{\"name\": str, \"members\": [str], \"kind\": "
                "\"mandatory\"|\"maintenance\"|\"discretionary\", \"location_zone\": int or "
                "null for home, \"desired_start_minute\": int, \"duration_minutes\": int}]}";
            break;
        case Stage::tours:
            shape =
                "{\"tours\": [{\"members\": [str], \"activity_names\": [str]}]} where every "
                "activity_name references one of today's activities";
            break;
        case Stage::trips:
        case Stage::self_correct:
            shape =
                "{\"narrative\": str, \"trips\": [{\"member\": str, \"purpose\": str, "
                "\"origin_zone\": int, \"dest_zone\": int, \"departure_minute\": int, "
                "\"route_links\": [int] or null}]}";
            break;
        case Stage::format:
            shape =
                "{\"trips\": [{\"member\": str, \"purpose\": str, \"origin_zone\": int, "
                "\"dest_zone\": int, \"departure_minute\": int, \"route_links\": [int], "
                "\"expected_arrival_minute\": int}]}";
            break;
        case Stage::reflect:
            shape = "{\"insights\": [str]}";
            break;
    }
    return "Respond with exactly one fenced ```json code block and nothing else outside it. "
           "The block must parse as JSON of shape " +
           shape + ".";
}

PromptBundle build_prompt(Stage stage, const DecisionContext& ctx, const nlohmann::json& input) {
    PromptBundle bundle;
    bundle.user_tag = user_tag_for(ctx.profile.agent_id, ctx.day, stage);

    std::ostringstream sys;
    sys << "You are the travel decision-maker for household " << ctx.profile.agent_id
        << ".\nIdentity: " << ctx.profile.identity_text
        << "\nTraits: " << ctx.profile.traits_text
        << "\nHome zone: " << ctx.profile.home_zone
        << "\nYou decide activities, tours and trips for every household member and you "
           "learn from past days.";
    bundle.messages.push_back({"system", sys.str()});

    std::ostringstream user;
    user << "Day " << ctx.day << ".\n\n";
    user << "Road network:\n" << ctx.network_brief << "\n\n";
    append_list(user, "Recent activity memory (newest first):", ctx.retrieved_activity_memory);
    user << "\n";
    append_list(user, "Recent travel memory (newest first):", ctx.retrieved_travel_memory);
    user << "\n";

    user << "Task: " << stage_task(stage) << "\n\n";

    if (!input.is_null()) {
        user << "Input:\n```json\n" << input.dump(2) << "\n```\n\n";
    }
    user << stage_schema_hint(stage) << "\n";
    bundle.messages.push_back({"user", user.str()});
    return bundle;
}

}  // namespace tripweaver
