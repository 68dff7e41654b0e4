#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swarmsim/config.hpp"
#include "swarmsim/metrics.hpp"

namespace swarmsim {

/// Outcome of one grid cell: every replication plus the summary, or the
/// reason the cell could not be completed.
struct CellResult {
    ScenarioConfig config;
    std::string key;
    std::vector<RunResult> runs;
    std::optional<ReplicationSummary> summary;
    std::string error;
    bool resumed = false;

    bool ok() const noexcept { return error.empty() && summary.has_value(); }
};

struct ExperimentOptions {
    unsigned jobs = 1;
    bool check_invariants = false;
    /// When set, each finished cell is written to <cell_dir>/<key>.json and
    /// a matching file found there is reused instead of re-running the cell.
    std::optional<std::filesystem::path> cell_dir;
    bool resume = true;
    std::function<void(const CellResult&)> on_cell_done;
};

/// File-name-safe identifier, e.g. "am_SBNP_occ0.4_os20000000".
std::string cell_key(const ScenarioConfig& cfg);

/// Replication i runs with seed cfg.seed + i.
std::vector<std::uint64_t> replication_seeds(const ScenarioConfig& cfg);

CellResult run_cell(const ScenarioConfig& cfg, const ExperimentOptions& options = {});

/// Runs every cell of `cells`. Cells are independent; replications of all
/// cells are spread across `options.jobs` worker threads. Results come back
/// in input order regardless of completion order.
std::vector<CellResult> run_experiment(const std::vector<ScenarioConfig>& cells, const ExperimentOptions& options = {});

inline std::vector<CellResult> run_experiment(const ExperimentGrid& grid, const ExperimentOptions& options = {}) {
    return run_experiment(grid.cells(), options);
}

} // namespace swarmsim
