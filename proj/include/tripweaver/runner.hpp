#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "tripweaver/metrics.hpp"
#include "tripweaver/scenario.hpp"

namespace tripweaver {

struct RunOptions {
    std::optional<CoreId> core_override;  // forces every stage to this core
    std::optional<int> days_override;
    std::optional<std::uint64_t> seed_override;
};

// Runs the full multi-day simulation and persists the run directory:
//   config.json
//   day_<dd>/agent_<id>/{activities,tours,draft.txt,findings,trips,outcomes,
//                        memory}.json
//   day_<dd>/network.csv
//   metrics/{activities,arrivals,misses}.csv
//   report.md
//   meta.json            (timestamps live only here)
// Everything except meta.json is a deterministic function of the config.
RunArtifacts run_simulation(const SimulationConfig& config,
                            const std::filesystem::path& out_dir, const RunOptions& options = {});

// Rebuilds artifacts from a persisted run directory (for `report`).
RunArtifacts load_run_dir(const std::filesystem::path& run_dir);

std::string run_id_for(const SimulationConfig& config);

}  // namespace tripweaver
