#include "tripweaver/memory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace tripweaver {

namespace {

void check_day_order(int last_day, int new_day) {
    if (new_day < 1) throw ConfigError("memory: day must be >= 1");
    if (new_day < last_day)
        throw ConfigError("memory: day " + std::to_string(new_day) +
                          " appended after day " + std::to_string(last_day));
}

std::string render_links(const std::vector<int>& links) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < links.size(); ++i) {
        if (i) os << ",";
        os << links[i];
    }
    os << "]";
    return os.str();
}

}  // namespace

int MemoryStore::compacted_through() const {
    return long_term.empty() ? 0 : long_term.back().through_day;
}

void append_record(MemoryStore& store, ActivityRecord record) {
    check_day_order(store.activity.empty() ? 0 : store.activity.back().day, record.day);
    store.activity.push_back(std::move(record));
}

void append_record(MemoryStore& store, TravelRecord record) {
    check_day_order(store.travel.empty() ? 0 : store.travel.back().day, record.day);
    store.travel.push_back(std::move(record));
}

Retrieval retrieve(const MemoryStore& store, MemoryKind kind, int as_of_day, int window_days,
                   int max_items) {
    if (window_days < 1) throw ConfigError("memory: window_days must be >= 1");
    if (max_items < 0) throw ConfigError("memory: max_items must be >= 0");
    Retrieval out;
    const int window_start = as_of_day - window_days;
    const int window_end = as_of_day - 1;
    const int hidden_through = store.compacted_through();

    for (const auto& s : store.long_term) {
        if (s.through_day <= window_end) out.summaries.push_back(s);
    }

    auto in_scope = [&](int day) {
        return day >= window_start && day <= window_end && day > hidden_through;
    };
    if (kind == MemoryKind::activity) {
        for (auto it = store.activity.rbegin(); it != store.activity.rend(); ++it) {
            if (static_cast<int>(out.activity.size()) >= max_items) break;
            if (it->day > window_end) continue;
            if (it->day < window_start) break;  // records are day-ordered
            if (in_scope(it->day)) out.activity.push_back(*it);
        }
    } else {
        for (auto it = store.travel.rbegin(); it != store.travel.rend(); ++it) {
            if (static_cast<int>(out.travel.size()) >= max_items) break;
            if (it->day > window_end) continue;
            if (it->day < window_start) break;
            if (in_scope(it->day)) out.travel.push_back(*it);
        }
    }
    return out;
}

void compact(MemoryStore& store, int through_day, const Summarizer& summarizer) {
    const int from_day = store.compacted_through() + 1;
    if (through_day < from_day) return;  // nothing new to cover

    std::vector<ActivityRecord> acts;
    for (const auto& r : store.activity) {
        if (r.day >= from_day && r.day <= through_day) acts.push_back(r);
    }
    std::vector<TravelRecord> travels;
    for (const auto& r : store.travel) {
        if (r.day >= from_day && r.day <= through_day) travels.push_back(r);
    }
    if (acts.empty() && travels.empty()) return;

    LongTermSummary summary;
    summary.from_day = from_day;
    summary.through_day = through_day;
    summary.text = summarizer(acts, travels, from_day, through_day);
    store.long_term.push_back(std::move(summary));
}

std::string template_rollup(std::span<const ActivityRecord> activity,
                            std::span<const TravelRecord> travel, int from_day, int through_day) {
    std::ostringstream os;
    os << "Days " << from_day << "-" << through_day << ": ";
    std::map<std::string, std::pair<int, double>> per_purpose;  // purpose -> (count, sum)
    for (const auto& r : travel) {
        auto& agg = per_purpose[r.purpose];
        agg.first += 1;
        agg.second += r.travel_minutes;
    }
    if (per_purpose.empty()) {
        os << "no trips";
    } else {
        bool first = true;
        for (const auto& [purpose, agg] : per_purpose) {
            if (!first) os << "; ";
            first = false;
            os << agg.first << " " << purpose << " trip" << (agg.first == 1 ? "" : "s")
               << ", mean travel " << format_minutes(std::round(agg.second / agg.first * 10) / 10)
               << " min";
        }
    }
    os << ". " << activity.size() << " activity record" << (activity.size() == 1 ? "" : "s")
       << ".";
    return os.str();
}

std::string render_travel_record(const TravelRecord& r) {
    std::ostringstream os;
    os << "Day " << r.day << ": " << r.member << " traveled " << r.origin_zone << "→"
       << r.dest_zone << " for " << r.purpose << " via links " << render_links(r.route_links)
       << ", departed " << format_minutes(r.departure_minute) << ", expected "
       << format_minutes(r.expected_arrival_minute) << ", arrived "
       << format_minutes(r.actual_arrival_minute) << " (";
    const double delta = r.actual_arrival_minute - r.expected_arrival_minute;
    if (std::abs(delta) < 0.5) {
        os << "on time";
    } else if (delta > 0) {
        os << "late by " << format_minutes(delta) << " min";
    } else {
        os << "early by " << format_minutes(-delta) << " min";
    }
    os << ").";
    return os.str();
}

std::string render_activity_text(int day, const Activity& activity) {
    std::ostringstream os;
    os << "Day " << day << ": " << activity.name << " (" << to_string(activity.kind) << ") by ";
    for (size_t i = 0; i < activity.member_roles.size(); ++i) {
        if (i) os << ", ";
        os << activity.member_roles[i];
    }
    if (activity.location_zone) {
        os << " at zone " << *activity.location_zone;
    } else {
        os << " at home";
    }
    os << " from " << activity.desired_start_minute << " for " << activity.duration_minutes
       << " min.";
    return os.str();
}

}  // namespace tripweaver
