#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dptune/datasets.hpp"
#include "dptune/objective.hpp"
#include "dptune/types.hpp"

namespace dptune {

/// Full history of one search run: ordered trial records, per-trial visit
/// shards (in-memory runs only), merged counters, and RL heatmaps.
struct Ledger {
  std::string run_id;
  std::string strategy;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  double weight_sum = 1.0;  ///< alpha_utility + alpha_privacy, for percent reporting

  std::vector<TrialRecord> records;
  std::vector<VisitCounter> visit_shards;  ///< one per trial; empty when loaded
  std::vector<std::int64_t> sample_ids;    ///< train row -> stable id
  VisitCounter merged_visits;              ///< whole-run per-sample totals
  VisitCounter visits_to_best;             ///< Fig.-3 payload, kept by finalize/load
  std::vector<MatXd> rl_heatmaps;
  nlohmann::json accountant_audit;         ///< best trial's order/curve, may be null
};

/// Recomputes merged_visits and visits_to_best from the shards.
void finalize_ledger(Ledger& ledger);

/// Index of the max-reward ok record; earlier trial wins ties.
std::optional<std::size_t> best_record(std::span<const TrialRecord> records);

struct BaselineCost {
  std::int64_t trials = 0;
  std::uint64_t sample_visits = 0;
  double wall_seconds = 0.0;
};

/// Cumulative cost up to and including the first record with
/// reward >= baseline; nullopt when the baseline is never reached.
std::optional<BaselineCost> budget_to_baseline(const Ledger& ledger,
                                               double baseline);

/// Elementwise sum of visit increments over trials 0..best inclusive.
/// Falls back to the stored counter when per-trial shards are absent.
VisitCounter visits_before_best(const Ledger& ledger);

/// Writes trials.csv, summary.json, visits.csv, visits_total.csv and
/// rl_heatmap_ep{k}.tsv into dir. Numbers carry 17 significant digits;
/// re-exporting the same ledger is byte-identical.
void export_ledger(const Ledger& ledger, const std::filesystem::path& dir);

/// Reads an exported directory back; visit shards and heatmaps stay empty.
Ledger load_ledger(const std::filesystem::path& dir);

struct ComparisonRow {
  std::string strategy;
  bool failed = false;  ///< no ok trials
  double best_reward = 0.0;
  double best_accuracy = 0.0;
  double best_epsilon = 0.0;
  std::optional<std::int64_t> trials_to_baseline;
  std::optional<std::uint64_t> visits_to_baseline;
  std::optional<double> wall_to_baseline;
  std::uint64_t total_visits_to_best = 0;
};

struct ComparisonReport {
  double baseline = 0.0;  ///< grid's best reward
  std::vector<ComparisonRow> rows;
};

/// One row per ledger; the baseline comes from the grid ledger. Throws
/// SearchError("baseline unavailable") when no grid ledger is present.
ComparisonReport compare(std::span<const Ledger> ledgers);

void write_comparison(const ComparisonReport& report,
                      const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path);

/// Round-trip-exact decimal rendering (17 significant digits).
std::string format_double(double value);

}  // namespace dptune
