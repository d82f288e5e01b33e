#include <cstdio>
#include <fstream>
#include <sstream>

#include "tripweaver/metrics.hpp"

namespace tripweaver {
namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunError("cannot write " + path.string());
    out << content;
    if (!out) throw RunError("failed writing " + path.string());
}

std::string one_decimal(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

}  // namespace

std::string render_percent(double fraction) {
    return one_decimal(fraction * 100.0) + "%";
}

void emit_report(const RunArtifacts& run, const Metrics& metrics,
                 const std::filesystem::path& run_dir) {
    const auto metrics_dir = run_dir / "metrics";
    std::filesystem::create_directories(metrics_dir);

    {
        std::ostringstream csv;
        csv << "agent,day,kind,occurred\n";
        for (const auto& [agent_id, kinds] : metrics.occurrence) {
            for (int d = 1; d <= metrics.days; ++d) {
                for (const auto& [kind, flags] : kinds) {
                    csv << agent_id << ',' << d << ',' << kind << ','
                        << static_cast<int>(flags[d - 1]) << '\n';
                }
            }
        }
        write_text(metrics_dir / "activities.csv", csv.str());
    }

    {
        std::ostringstream csv;
        csv << "agent,member,day,required_minute,arrival_minute,deviation_minutes\n";
        for (const auto& series : metrics.arrivals) {
            for (const auto& point : series.points) {
                csv << series.agent_id << ',' << series.member << ',' << point.day << ','
                    << series.required_minute << ',' << format_minutes(point.arrival_minute)
                    << ',' << format_minutes(point.arrival_minute - series.required_minute)
                    << '\n';
            }
        }
        write_text(metrics_dir / "arrivals.csv", csv.str());
    }

    {
        std::ostringstream csv;
        csv << "day,declared,formatted,missed\n";
        for (int d = 1; d <= metrics.days; ++d) {
            csv << d << ',' << metrics.declared_per_day[d - 1] << ','
                << metrics.formatted_per_day[d - 1] << ','
                << metrics.declared_per_day[d - 1] - metrics.formatted_per_day[d - 1] << '\n';
        }
        write_text(metrics_dir / "misses.csv", csv.str());
    }

    std::ostringstream md;
    md << "# Travel simulation report\n\n";
    md << "Run `" << run.run_id << "`: " << metrics.days << " day"
       << (metrics.days == 1 ? "" : "s") << ", " << run.config.agents.size() << " agents, seed "
       << run.config.seed << ".\n\n";

    md << "## Activity participation\n\n";
    md << "| agent | kind | days | per week |\n|---|---|---|---|\n";
    for (const auto& [agent_id, kinds] : metrics.weekly) {
        for (const auto& [kind, freq] : kinds) {
            md << "| " << agent_id << " | " << kind << " | " << freq.occurrences << " | "
               << one_decimal(freq.per_week) << " |\n";
        }
    }
    md << "\n";

    bool full_coverage = true;
    for (const auto& [agent_id, coverage] : metrics.mandatory_coverage) {
        if (coverage < 1.0) full_coverage = false;
    }
    if (full_coverage) {
        md << "Mandatory participation: " << render_percent(1.0)
           << " of workdays for every agent.\n\n";
    } else {
        md << "Mandatory participation by agent:\n\n";
        for (const auto& [agent_id, coverage] : metrics.mandatory_coverage) {
            md << "- agent " << agent_id << ": " << render_percent(coverage) << "\n";
        }
        md << "\n";
    }

    md << "## Trip completion\n\n";
    md << metrics.total_declared << " trips declared, "
       << metrics.total_declared - metrics.total_missed << " simulated, "
       << metrics.total_missed << " missed (" << render_percent(metrics.miss_rate) << ").\n\n";

    md << "## Punctuality\n\n";
    if (!metrics.convergence_available) {
        md << "Insufficient horizon for convergence metrics (need at least 14 days).\n";
    } else {
        md << "Mean absolute deviation from the required arrival time, first week vs final "
              "week:\n\n";
        md << "| series | first week (min) | final week (min) |\n|---|---|---|\n";
        for (const auto& [member, pair] : metrics.convergence_by_member) {
            md << "| " << member << " | " << one_decimal(pair.first_week_mean_abs_dev) << " | "
               << one_decimal(pair.last_week_mean_abs_dev) << " |\n";
        }
        md << "| overall | " << one_decimal(metrics.convergence_overall.first_week_mean_abs_dev)
           << " | " << one_decimal(metrics.convergence_overall.last_week_mean_abs_dev)
           << " |\n";
    }
    write_text(run_dir / "report.md", md.str());
}

}  // namespace tripweaver
