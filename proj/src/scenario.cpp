#include "tripweaver/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tripweaver/json_io.hpp"

namespace tripweaver {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string idx(const std::string& base, size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

}  // namespace

ZoneKind zone_kind_from_string(const std::string& s) {
    if (s == "residential") return ZoneKind::residential;
    if (s == "school") return ZoneKind::school;
    if (s == "business") return ZoneKind::business;
    if (s == "recreational") return ZoneKind::recreational;
    throw ConfigError("unknown zone kind '" + s + "'");
}

const char* to_string(ZoneKind kind) {
    switch (kind) {
        case ZoneKind::residential: return "residential";
        case ZoneKind::school: return "school";
        case ZoneKind::business: return "business";
        case ZoneKind::recreational: return "recreational";
    }
    return "?";
}

ActivityKind activity_kind_from_string(const std::string& s) {
    if (s == "mandatory") return ActivityKind::mandatory;
    if (s == "maintenance") return ActivityKind::maintenance;
    if (s == "discretionary") return ActivityKind::discretionary;
    throw ConfigError("unknown activity kind '" + s + "'");
}

const char* to_string(ActivityKind kind) {
    switch (kind) {
        case ActivityKind::mandatory: return "mandatory";
        case ActivityKind::maintenance: return "maintenance";
        case ActivityKind::discretionary: return "discretionary";
    }
    return "?";
}

FindingCode finding_code_from_string(const std::string& s) {
    if (s == "mandatory_missing") return FindingCode::mandatory_missing;
    if (s == "route_discontiguous") return FindingCode::route_discontiguous;
    if (s == "route_wrong_endpoints") return FindingCode::route_wrong_endpoints;
    if (s == "infeasible_timing") return FindingCode::infeasible_timing;
    if (s == "overlapping_trips") return FindingCode::overlapping_trips;
    if (s == "bad_zone") return FindingCode::bad_zone;
    if (s == "late_expectation") return FindingCode::late_expectation;
    throw ConfigError("unknown finding code '" + s + "'");
}

const char* to_string(FindingCode code) {
    switch (code) {
        case FindingCode::mandatory_missing: return "mandatory_missing";
        case FindingCode::route_discontiguous: return "route_discontiguous";
        case FindingCode::route_wrong_endpoints: return "route_wrong_endpoints";
        case FindingCode::infeasible_timing: return "infeasible_timing";
        case FindingCode::overlapping_trips: return "overlapping_trips";
        case FindingCode::bad_zone: return "bad_zone";
        case FindingCode::late_expectation: return "late_expectation";
    }
    return "?";
}

Stage stage_from_string(const std::string& s) {
    if (s == "activities") return Stage::activities;
    if (s == "tours") return Stage::tours;
    if (s == "trips") return Stage::trips;
    if (s == "self_correct") return Stage::self_correct;
    if (s == "format") return Stage::format;
    if (s == "reflect") return Stage::reflect;
    throw ConfigError("unknown stage '" + s + "'");
}

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::activities: return "activities";
        case Stage::tours: return "tours";
        case Stage::trips: return "trips";
        case Stage::self_correct: return "self_correct";
        case Stage::format: return "format";
        case Stage::reflect: return "reflect";
    }
    return "?";
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = {Stage::activities, Stage::tours,
                                              Stage::trips,      Stage::self_correct,
                                              Stage::format,     Stage::reflect};
    return stages;
}

CoreId core_id_from_string(const std::string& s) {
    if (s == "oracle") return CoreId::oracle;
    if (s == "llm") return CoreId::llm;
    throw ConfigError("unknown core '" + s + "' (expected 'oracle' or 'llm')");
}

const char* to_string(CoreId core) {
    switch (core) {
        case CoreId::oracle: return "oracle";
        case CoreId::llm: return "llm";
    }
    return "?";
}

bool Network::has_zone(int id) const {
    return std::any_of(zones.begin(), zones.end(), [id](const Zone& z) { return z.id == id; });
}

bool Network::has_link(int id) const {
    return std::any_of(links.begin(), links.end(), [id](const Link& l) { return l.id == id; });
}

const Zone& Network::zone(int id) const {
    for (const auto& z : zones) {
        if (z.id == id) return z;
    }
    throw ConfigError("unknown zone " + std::to_string(id));
}

const Link& Network::link(int id) const {
    for (const auto& l : links) {
        if (l.id == id) return l;
    }
    throw ConfigError("unknown link " + std::to_string(id));
}

const MemberSchedule* HouseholdProfile::find_member(const std::string& role) const {
    for (const auto& m : members) {
        if (m.member == role) return &m;
    }
    return nullptr;
}

std::string format_minutes(double minutes) {
    double rounded = std::round(minutes);
    if (std::abs(minutes - rounded) < 1e-9) {
        return std::to_string(static_cast<long long>(rounded));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", minutes);
    return buf;
}

SimulationConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw RunError("cannot open scenario file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

SimulationConfig parse_scenario(const nlohmann::json& doc) {
    SimulationConfig cfg;
    try {
        cfg.days = doc.at("days").get<int>();
        cfg.seed = doc.at("seed").get<std::uint64_t>();
        cfg.time_step_minutes = doc.value("time_step_minutes", 1.0);
        cfg.zones = doc.at("zones").get<std::vector<Zone>>();
        cfg.links = doc.at("links").get<std::vector<Link>>();
        cfg.agents = doc.at("agents").get<std::vector<HouseholdProfile>>();
        if (doc.contains("stage_cores")) {
            for (const auto& [key, value] : doc.at("stage_cores").items()) {
                cfg.stage_cores[stage_from_string(key)] =
                    core_id_from_string(value.get<std::string>());
            }
        }
        if (doc.contains("llm")) {
            const auto& l = doc.at("llm");
            cfg.llm.model = l.value("model", cfg.llm.model);
            cfg.llm.temperature = l.value("temperature", cfg.llm.temperature);
            cfg.llm.max_retries = l.value("max_retries", cfg.llm.max_retries);
            cfg.llm.max_parallel = l.value("max_parallel", cfg.llm.max_parallel);
        }
        cfg.memory_window_days = doc.value("memory_window_days", 7);
        cfg.self_correction_max_rounds = doc.value("self_correction_max_rounds", 2);
        cfg.weekend_pattern = doc.value("weekend_pattern", false);
        cfg.memory_compact_after_days = doc.value("memory_compact_after_days", 0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }

    // Defaults: any unmapped stage runs on the oracle core.
    for (Stage s : all_stages()) {
        if (!cfg.stage_cores.count(s)) cfg.stage_cores[s] = CoreId::oracle;
    }

    // Structural validation with field paths.
    if (cfg.days < 1) fail("days", "must be >= 1");
    if (cfg.time_step_minutes <= 0.0) fail("time_step_minutes", "must be positive");
    if (cfg.memory_window_days < 1) fail("memory_window_days", "must be >= 1");
    if (cfg.self_correction_max_rounds < 0) fail("self_correction_max_rounds", "must be >= 0");
    if (cfg.llm.max_retries < 1) fail("llm.max_retries", "must be >= 1");
    if (cfg.llm.max_parallel < 1) fail("llm.max_parallel", "must be >= 1");

    if (cfg.zones.empty()) fail("zones", "must be non-empty");
    std::set<int> zone_ids;
    for (size_t i = 0; i < cfg.zones.size(); ++i) {
        const Zone& z = cfg.zones[i];
        if (!zone_ids.insert(z.id).second) fail(idx("zones", i) + ".id",
                                                "duplicate zone id " + std::to_string(z.id));
    }

    if (cfg.links.empty()) fail("links", "must be non-empty");
    std::set<int> link_ids;
    for (size_t i = 0; i < cfg.links.size(); ++i) {
        const Link& l = cfg.links[i];
        const std::string base = idx("links", i);
        if (!link_ids.insert(l.id).second) fail(base + ".id",
                                                "duplicate link id " + std::to_string(l.id));
        if (!zone_ids.count(l.origin_zone)) fail(base + ".from",
                                                 "unknown zone " + std::to_string(l.origin_zone));
        if (!zone_ids.count(l.dest_zone)) fail(base + ".to",
                                               "unknown zone " + std::to_string(l.dest_zone));
        if (l.origin_zone == l.dest_zone)
            fail(base, "link " + std::to_string(l.id) + ": origin equals destination");
        if (l.free_flow_minutes <= 0.0) fail(base + ".free_flow_minutes", "must be positive");
        if (l.capacity_vph <= 0.0) fail(base + ".capacity_vph", "must be positive");
    }

    if (cfg.agents.empty()) fail("agents", "agents must be non-empty");
    std::set<int> agent_ids;
    for (size_t i = 0; i < cfg.agents.size(); ++i) {
        const HouseholdProfile& a = cfg.agents[i];
        const std::string base = idx("agents", i);
        if (!agent_ids.insert(a.agent_id).second)
            fail(base + ".id", "duplicate agent id " + std::to_string(a.agent_id));
        if (!zone_ids.count(a.home_zone))
            fail(base + ".home_zone", "unknown zone " + std::to_string(a.home_zone));
        if (a.members.empty()) fail(base + ".members", "must be non-empty");
        std::set<std::string> roles;
        for (size_t m = 0; m < a.members.size(); ++m) {
            const MemberSchedule& ms = a.members[m];
            const std::string mbase = base + "." + idx("members", m);
            if (ms.member.empty()) fail(mbase + ".role", "must be non-empty");
            if (!roles.insert(ms.member).second)
                fail(mbase + ".role", "duplicate member role '" + ms.member + "'");
            if (ms.mandatory_zone) {
                if (!zone_ids.count(*ms.mandatory_zone))
                    fail(mbase + ".zone", "unknown zone " + std::to_string(*ms.mandatory_zone));
                if (!ms.mandatory_window)
                    fail(mbase + ".window", "required when a mandatory zone is set");
            }
            if (ms.mandatory_window) {
                const auto& w = *ms.mandatory_window;
                if (!(0 <= w.start_minute && w.start_minute < w.end_minute && w.end_minute < 1440))
                    fail(mbase + ".window", "must satisfy 0 <= start < end < 1440");
            }
        }
    }
    return cfg;
}

nlohmann::json serialize(const SimulationConfig& config) {
    nlohmann::json stage_cores;
    for (const auto& [stage, core] : config.stage_cores) {
        stage_cores[to_string(stage)] = to_string(core);
    }
    return nlohmann::json{
        {"days", config.days},
        {"seed", config.seed},
        {"time_step_minutes", config.time_step_minutes},
        {"zones", config.zones},
        {"links", config.links},
        {"agents", config.agents},
        {"stage_cores", stage_cores},
        {"llm",
         {{"model", config.llm.model},
          {"temperature", config.llm.temperature},
          {"max_retries", config.llm.max_retries},
          {"max_parallel", config.llm.max_parallel}}},
        {"memory_window_days", config.memory_window_days},
        {"self_correction_max_rounds", config.self_correction_max_rounds},
        {"weekend_pattern", config.weekend_pattern},
        {"memory_compact_after_days", config.memory_compact_after_days},
    };
}

bool is_workday(int day, bool weekend_pattern) {
    if (!weekend_pattern) return true;  // all-workdays default
    int day_of_week = (day - 1) % 7;    // day 1 -> 0
    return day_of_week < 5;
}

std::vector<Activity> mandatory_activities(const HouseholdProfile& profile, int day,
                                           bool weekend_pattern,
                                           const std::vector<Zone>& zones) {
    if (day < 1) throw ConfigError("day must be >= 1");
    std::vector<Activity> out;
    if (!is_workday(day, weekend_pattern)) return out;
    for (const auto& m : profile.members) {
        if (!m.mandatory_zone || !m.travels) continue;
        const auto& w = *m.mandatory_window;
        Activity a;
        a.name = "work";
        for (const auto& z : zones) {
            if (z.id == *m.mandatory_zone && z.kind == ZoneKind::school) a.name = "school";
        }
        a.member_roles = {m.member};
        a.kind = ActivityKind::mandatory;
        a.location_zone = m.mandatory_zone;
        a.desired_start_minute = w.start_minute;
        a.duration_minutes = w.end_minute - w.start_minute;
        a.requires_travel = *m.mandatory_zone != profile.home_zone;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace tripweaver
