#include "tripweaver/json_io.hpp"

namespace tripweaver {

namespace {

template <typename T>
void set_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
    if (j.contains(key) && !j.at(key).is_null()) {
        v = j.at(key).get<T>();
    } else {
        v.reset();
    }
}

}  // namespace

void to_json(nlohmann::json& j, const Zone& z) {
    j = {{"id", z.id}, {"kind", to_string(z.kind)}, {"label", z.label}};
}

void from_json(const nlohmann::json& j, Zone& z) {
    z.id = j.at("id").get<int>();
    z.kind = zone_kind_from_string(j.at("kind").get<std::string>());
    z.label = j.value("label", std::string{});
}

void to_json(nlohmann::json& j, const Link& l) {
    j = {{"id", l.id},
         {"from", l.origin_zone},
         {"to", l.dest_zone},
         {"free_flow_minutes", l.free_flow_minutes},
         {"capacity_vph", l.capacity_vph}};
}

void from_json(const nlohmann::json& j, Link& l) {
    l.id = j.at("id").get<int>();
    l.origin_zone = j.at("from").get<int>();
    l.dest_zone = j.at("to").get<int>();
    l.free_flow_minutes = j.at("free_flow_minutes").get<double>();
    l.capacity_vph = j.at("capacity_vph").get<double>();
}

void to_json(nlohmann::json& j, const MemberSchedule& m) {
    j = nlohmann::json{{"role", m.member}, {"travels", m.travels}};
    set_optional(j, "zone", m.mandatory_zone);
    if (m.mandatory_window) {
        j["window"] = {m.mandatory_window->start_minute, m.mandatory_window->end_minute};
    }
}

void from_json(const nlohmann::json& j, MemberSchedule& m) {
    m.member = j.at("role").get<std::string>();
    m.travels = j.value("travels", true);
    get_optional(j, "zone", m.mandatory_zone);
    m.mandatory_window.reset();
    if (j.contains("window") && !j.at("window").is_null()) {
        const auto& w = j.at("window");
        m.mandatory_window = MandatoryWindow{w.at(0).get<int>(), w.at(1).get<int>()};
    }
}

void to_json(nlohmann::json& j, const HouseholdProfile& p) {
    j = {{"id", p.agent_id},
         {"identity", p.identity_text},
         {"traits", p.traits_text},
         {"home_zone", p.home_zone},
         {"members", p.members}};
}

void from_json(const nlohmann::json& j, HouseholdProfile& p) {
    p.agent_id = j.at("id").get<int>();
    p.identity_text = j.value("identity", std::string{});
    p.traits_text = j.value("traits", std::string{});
    p.home_zone = j.at("home_zone").get<int>();
    p.members = j.at("members").get<std::vector<MemberSchedule>>();
}

void to_json(nlohmann::json& j, const Activity& a) {
    j = nlohmann::json{{"name", a.name},
                       {"members", a.member_roles},
                       {"kind", to_string(a.kind)},
                       {"start_minute", a.desired_start_minute},
                       {"duration_minutes", a.duration_minutes},
                       {"requires_travel", a.requires_travel}};
    set_optional(j, "zone", a.location_zone);
}

void from_json(const nlohmann::json& j, Activity& a) {
    a.name = j.at("name").get<std::string>();
    a.member_roles = j.at("members").get<std::vector<std::string>>();
    a.kind = activity_kind_from_string(j.at("kind").get<std::string>());
    get_optional(j, "zone", a.location_zone);
    a.desired_start_minute = j.at("start_minute").get<int>();
    a.duration_minutes = j.at("duration_minutes").get<int>();
    a.requires_travel = j.value("requires_travel", false);
}

void to_json(nlohmann::json& j, const Tour& t) {
    j = {{"members", t.member_roles},
         {"anchor_zone", t.anchor_zone},
         {"activities", t.ordered_activities}};
}

void from_json(const nlohmann::json& j, Tour& t) {
    t.member_roles = j.at("members").get<std::vector<std::string>>();
    t.anchor_zone = j.at("anchor_zone").get<int>();
    t.ordered_activities = j.at("activities").get<std::vector<Activity>>();
}

void to_json(nlohmann::json& j, const PlannedTrip& t) {
    j = {{"trip_id", t.trip_id},
         {"member", t.member},
         {"purpose", t.purpose},
         {"origin_zone", t.origin_zone},
         {"dest_zone", t.dest_zone},
         {"departure_minute", t.departure_minute},
         {"route_links", t.route_links},
         {"expected_arrival_minute", t.expected_arrival_minute}};
}

void from_json(const nlohmann::json& j, PlannedTrip& t) {
    t.trip_id = j.at("trip_id").get<std::string>();
    t.member = j.at("member").get<std::string>();
    t.purpose = j.at("purpose").get<std::string>();
    t.origin_zone = j.at("origin_zone").get<int>();
    t.dest_zone = j.at("dest_zone").get<int>();
    t.departure_minute = j.at("departure_minute").get<int>();
    t.route_links = j.at("route_links").get<std::vector<int>>();
    t.expected_arrival_minute = j.at("expected_arrival_minute").get<int>();
}

void to_json(nlohmann::json& j, const TripOutcome& o) {
    j = {{"trip_id", o.trip_id},
         {"actual_departure_minute", o.actual_departure_minute},
         {"actual_arrival_minute", o.actual_arrival_minute},
         {"travel_minutes", o.travel_minutes},
         {"delay_vs_expected_minutes", o.delay_vs_expected_minutes},
         {"per_link_exit_minutes", o.per_link_exit_minutes},
         {"departure_delayed", o.departure_delayed}};
}

void from_json(const nlohmann::json& j, TripOutcome& o) {
    o.trip_id = j.at("trip_id").get<std::string>();
    o.actual_departure_minute = j.at("actual_departure_minute").get<double>();
    o.actual_arrival_minute = j.at("actual_arrival_minute").get<double>();
    o.travel_minutes = j.at("travel_minutes").get<double>();
    o.delay_vs_expected_minutes = j.at("delay_vs_expected_minutes").get<double>();
    o.per_link_exit_minutes = j.at("per_link_exit_minutes").get<std::vector<double>>();
    o.departure_delayed = j.value("departure_delayed", false);
}

void to_json(nlohmann::json& j, const ActivityRecord& r) {
    j = {{"day", r.day}, {"text", r.text}};
}

void from_json(const nlohmann::json& j, ActivityRecord& r) {
    r.day = j.at("day").get<int>();
    r.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const TravelRecord& r) {
    j = {{"day", r.day},
         {"member", r.member},
         {"purpose", r.purpose},
         {"origin_zone", r.origin_zone},
         {"dest_zone", r.dest_zone},
         {"route_links", r.route_links},
         {"departure_minute", r.departure_minute},
         {"expected_arrival_minute", r.expected_arrival_minute},
         {"actual_arrival_minute", r.actual_arrival_minute},
         {"travel_minutes", r.travel_minutes},
         {"rendered_text", r.rendered_text}};
}

void from_json(const nlohmann::json& j, TravelRecord& r) {
    r.day = j.at("day").get<int>();
    r.member = j.at("member").get<std::string>();
    r.purpose = j.at("purpose").get<std::string>();
    r.origin_zone = j.at("origin_zone").get<int>();
    r.dest_zone = j.at("dest_zone").get<int>();
    r.route_links = j.at("route_links").get<std::vector<int>>();
    r.departure_minute = j.at("departure_minute").get<double>();
    r.expected_arrival_minute = j.at("expected_arrival_minute").get<double>();
    r.actual_arrival_minute = j.at("actual_arrival_minute").get<double>();
    r.travel_minutes = j.at("travel_minutes").get<double>();
    r.rendered_text = j.at("rendered_text").get<std::string>();
}

void to_json(nlohmann::json& j, const LongTermSummary& s) {
    j = {{"from_day", s.from_day}, {"through_day", s.through_day}, {"text", s.text}};
}

void from_json(const nlohmann::json& j, LongTermSummary& s) {
    s.from_day = j.at("from_day").get<int>();
    s.through_day = j.at("through_day").get<int>();
    s.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const ValidationFinding& f) {
    j = {{"code", to_string(f.code)}, {"detail", f.detail}, {"subject", f.subject}};
}

void from_json(const nlohmann::json& j, ValidationFinding& f) {
    f.code = finding_code_from_string(j.at("code").get<std::string>());
    f.detail = j.at("detail").get<std::string>();
    f.subject = j.value("subject", std::string{});
}

void to_json(nlohmann::json& j, const DeclaredTrip& t) {
    j = {{"departure_minute", t.departure_minute},
         {"dest_zone", t.dest_zone},
         {"member", t.member},
         {"origin_zone", t.origin_zone},
         {"purpose", t.purpose},
         {"route_links", nullptr}};
    set_optional(j, "route_links", t.route_links);
}

void from_json(const nlohmann::json& j, DeclaredTrip& t) {
    t.member = j.at("member").get<std::string>();
    t.purpose = j.at("purpose").get<std::string>();
    t.origin_zone = j.at("origin_zone").get<int>();
    t.dest_zone = j.at("dest_zone").get<int>();
    t.departure_minute = j.at("departure_minute").get<int>();
    get_optional(j, "route_links", t.route_links);
}

void to_json(nlohmann::json& j, const PlanDraft& d) {
    j = {{"declared_count", d.declared_count},
         {"narrative", d.narrative},
         {"trips", d.declared_trips}};
}

void from_json(const nlohmann::json& j, PlanDraft& d) {
    d.narrative = j.value("narrative", std::string{});
    d.declared_trips = j.at("trips").get<std::vector<DeclaredTrip>>();
    d.declared_count = j.value("declared_count", static_cast<int>(d.declared_trips.size()));
}

void to_json(nlohmann::json& j, const StageTrace& t) {
    j = {{"attempts", t.attempts}, {"error", t.error}, {"ok", t.ok}};
}

void from_json(const nlohmann::json& j, StageTrace& t) {
    t.attempts = j.value("attempts", 1);
    t.ok = j.value("ok", true);
    t.error = j.value("error", std::string{});
}

void to_json(nlohmann::json& j, const MemoryStore& m) {
    j = {{"activity", m.activity}, {"long_term", m.long_term}, {"travel", m.travel}};
}

void from_json(const nlohmann::json& j, MemoryStore& m) {
    m.activity = j.at("activity").get<std::vector<ActivityRecord>>();
    m.travel = j.at("travel").get<std::vector<TravelRecord>>();
    m.long_term = j.value("long_term", std::vector<LongTermSummary>{});
}

}  // namespace tripweaver
