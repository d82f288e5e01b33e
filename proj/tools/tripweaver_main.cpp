#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tripweaver/metrics.hpp"
#include "tripweaver/runner.hpp"
#include "tripweaver/scenario.hpp"

namespace {

using namespace tripweaver;

void print_summary(const RunArtifacts& run, const Metrics& metrics,
                   const std::filesystem::path& dir) {
    std::cout << "run " << run.run_id << ": " << metrics.days << " day(s), "
              << run.config.agents.size() << " agent(s)\n";
    std::cout << "trips: " << metrics.total_declared << " declared, " << metrics.total_missed
              << " missed (" << render_percent(metrics.miss_rate) << ")\n";
    if (metrics.convergence_available) {
        std::cout << "arrival deviation (mean abs): first week "
                  << format_minutes(metrics.convergence_overall.first_week_mean_abs_dev)
                  << " min, final week "
                  << format_minutes(metrics.convergence_overall.last_week_mean_abs_dev)
                  << " min\n";
    } else {
        std::cout << "arrival convergence: insufficient horizon (need at least 14 days)\n";
    }
    std::cout << "report: " << (dir / "report.md").string() << "\n";
}

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::string& core, std::optional<int> days,
                std::optional<std::uint64_t> seed) {
    SimulationConfig config = load_scenario(config_path);
    RunOptions options;
    if (!core.empty()) options.core_override = core_id_from_string(core);
    options.days_override = days;
    options.seed_override = seed;
    const RunArtifacts run = run_simulation(config, out_dir, options);
    print_summary(run, compute_metrics(run), out_dir);
    return 0;
}

int report_command(const std::string& run_dir) {
    const RunArtifacts run = load_run_dir(run_dir);
    const Metrics metrics = compute_metrics(run);
    emit_report(run, metrics, run_dir);
    print_summary(run, metrics, run_dir);
    return 0;
}

int validate_command(const std::string& config_path) {
    const SimulationConfig config = load_scenario(config_path);
    std::cout << "OK: " << config.zones.size() << " zones, " << config.links.size()
              << " links, " << config.agents.size() << " agents, " << config.days
              << " day(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tripweaver - agent-based day-to-day travel demand simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, core, run_dir;
    std::optional<int> days;
    std::optional<std::uint64_t> seed;

    auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write a run directory");
    run_cmd->add_option("--config", config_path, "scenario json file")->required();
    run_cmd->add_option("--out", out_dir, "output run directory (must be empty or absent)")
        ->required();
    run_cmd->add_option("--core", core, "force every stage to one core")
        ->check(CLI::IsMember({"oracle", "llm"}));
    run_cmd->add_option("--days", days, "override the scenario horizon");
    run_cmd->add_option("--seed", seed, "override the scenario seed");

    auto* report_cmd = app.add_subcommand("report", "recompute metrics for an existing run");
    report_cmd->add_option("run_dir", run_dir, "run directory produced by `run`")->required();

    auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
    validate_cmd->add_option("--config", config_path, "scenario json file")->required();

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return run_command(config_path, out_dir, core, days, seed);
        if (report_cmd->parsed()) return report_command(run_dir);
        if (validate_cmd->parsed()) return validate_command(config_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
