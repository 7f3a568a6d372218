#pragma once

#include "quench/config.hpp"

#include <filesystem>
#include <vector>

namespace quench {

/// What an experiment produced: the summary (also written as summary.json)
/// and the files written, in order.
struct RunReport {
    Json summary;
    std::vector<std::filesystem::path> files;
};

/// Occupation of one or more modes through a quench. A list-valued
/// schedule.tau_q is a sweep: one occupancy file per value plus scaling and fit tables.
RunReport run_linear_qkt(const ExperimentConfig& cfg);

/// Two-mode model: QKT and TDGL flows from the same seeds, outcome tables,
/// optional Gaussian closure and master-equation snapshots.
RunReport run_toy(const ExperimentConfig& cfg);

/// Winding ensembles per tau_Q (or per domain count for the random-walk pipeline).
RunReport run_ring(const ExperimentConfig& cfg);

/// Same as run_ring without the per-run winding table.
RunReport run_scan(const ExperimentConfig& cfg);

RunReport run_experiment(const ExperimentConfig& cfg);

} // namespace quench
