#include "tripweaver/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace tripweaver {
namespace {

const std::vector<std::string>& kind_names() {
    static const std::vector<std::string> names{"mandatory", "maintenance", "discretionary"};
    return names;
}

struct DevAccum {
    double first_sum = 0.0;
    int first_n = 0;
    double last_sum = 0.0;
    int last_n = 0;

    ConvergencePair pair() const {
        ConvergencePair p;
        p.first_week_points = first_n;
        p.last_week_points = last_n;
        p.first_week_mean_abs_dev = first_n ? first_sum / first_n : 0.0;
        p.last_week_mean_abs_dev = last_n ? last_sum / last_n : 0.0;
        return p;
    }
};

}  // namespace

Metrics compute_metrics(const RunArtifacts& run) {
    if (run.days.empty()) {
        throw ConfigError("metrics require at least one simulated day");
    }
    Metrics m;
    m.days = static_cast<int>(run.days.size());
    const double weeks = m.days / 7.0;

    m.declared_per_day.assign(m.days, 0);
    m.formatted_per_day.assign(m.days, 0);

    for (const auto& profile : run.config.agents) {
        for (const auto& kind : kind_names()) {
            m.occurrence[profile.agent_id][kind].assign(m.days, 0);
        }
    }

    for (const auto& day : run.days) {
        const int d = day.day;
        for (const auto& log : day.logs) {
            m.declared_per_day[d - 1] += log.declared_count;
            m.formatted_per_day[d - 1] += log.formatted_count;
            for (const auto& activity : log.activities) {
                m.occurrence[log.agent_id][to_string(activity.kind)][d - 1] = 1;
            }
        }
    }

    for (auto& [agent_id, kinds] : m.occurrence) {
        int workdays = 0, covered = 0;
        for (int d = 1; d <= m.days; ++d) {
            if (!is_workday(d, run.config.weekend_pattern)) continue;
            ++workdays;
            if (kinds.at("mandatory")[d - 1]) ++covered;
        }
        m.mandatory_coverage[agent_id] = workdays ? static_cast<double>(covered) / workdays : 1.0;
        for (const auto& kind : kind_names()) {
            WeeklyFrequency freq;
            freq.occurrences =
                static_cast<int>(std::count(kinds.at(kind).begin(), kinds.at(kind).end(), 1));
            freq.per_week = weeks > 0.0 ? freq.occurrences / weeks : 0.0;
            m.weekly[agent_id][kind] = freq;
        }
    }

    m.total_declared = 0;
    int total_formatted = 0;
    for (int d = 0; d < m.days; ++d) {
        m.total_declared += m.declared_per_day[d];
        total_formatted += m.formatted_per_day[d];
    }
    m.total_missed = m.total_declared - total_formatted;
    m.miss_rate = m.total_declared > 0
                      ? static_cast<double>(m.total_missed) / m.total_declared
                      : 0.0;

    // First daily arrival of each member at their mandatory zone.
    for (const auto& profile : run.config.agents) {
        for (const auto& member : profile.members) {
            if (!member.mandatory_zone || !member.mandatory_window || !member.travels) continue;
            ArrivalSeries series;
            series.agent_id = profile.agent_id;
            series.member = member.member;
            series.required_minute = member.mandatory_window->start_minute;
            for (const auto& day : run.days) {
                for (std::size_t i = 0; i < day.logs.size(); ++i) {
                    const AgentDayLog& log = day.logs[i];
                    if (log.agent_id != profile.agent_id) continue;
                    const PlannedTrip* first = nullptr;
                    for (const auto& trip : log.planned_trips) {
                        if (trip.member != member.member ||
                            trip.dest_zone != *member.mandatory_zone) {
                            continue;
                        }
                        if (!first || trip.departure_minute < first->departure_minute ||
                            (trip.departure_minute == first->departure_minute &&
                             trip.trip_id < first->trip_id)) {
                            first = &trip;
                        }
                    }
                    if (!first) break;
                    const auto& outcomes = day.outcomes[i];
                    auto out = std::find_if(outcomes.begin(), outcomes.end(),
                                            [&](const TripOutcome& o) {
                                                return o.trip_id == first->trip_id;
                                            });
                    if (out != outcomes.end()) {
                        series.points.push_back({day.day, out->actual_arrival_minute});
                    }
                    break;
                }
            }
            if (!series.points.empty()) m.arrivals.push_back(std::move(series));
        }
    }

    m.convergence_available = m.days >= 14;
    if (m.convergence_available) {
        DevAccum overall;
        std::map<std::string, DevAccum> by_member;
        for (const auto& series : m.arrivals) {
            for (const auto& point : series.points) {
                const double dev = std::abs(point.arrival_minute - series.required_minute);
                if (point.day <= 7) {
                    overall.first_sum += dev;
                    ++overall.first_n;
                    by_member[series.member].first_sum += dev;
                    ++by_member[series.member].first_n;
                }
                if (point.day > m.days - 7) {
                    overall.last_sum += dev;
                    ++overall.last_n;
                    by_member[series.member].last_sum += dev;
                    ++by_member[series.member].last_n;
                }
            }
        }
        m.convergence_overall = overall.pair();
        for (const auto& [member, accum] : by_member) {
            m.convergence_by_member[member] = accum.pair();
        }
    }
    return m;
}

}  // namespace tripweaver
