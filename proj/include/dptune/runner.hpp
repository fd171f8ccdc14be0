#pragma once

#include <filesystem>

#include "dptune/ledger.hpp"
#include "dptune/optimizers.hpp"
#include "dptune/run_config.hpp"

namespace dptune {

struct RunArtifacts {
  Ledger ledger;
  SearchResult search;
};

/// Loads the configured dataset, runs the strategy, and assembles the
/// ledger (records, visit shards, heatmaps, accountant audit).
RunArtifacts execute_run(const RunConfig& cfg);

/// execute_run + export_ledger.
void run_and_export(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace dptune
