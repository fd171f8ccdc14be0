#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dptune/mlp.hpp"
#include "dptune/objective.hpp"
#include "dptune/search_space.hpp"
#include "dptune/types.hpp"

namespace dptune {

/// Search stops as soon as any configured limit is exhausted.
struct Budget {
  int max_trials = 1;
  std::optional<std::uint64_t> max_sample_visits;
  std::optional<double> wall_limit_seconds;
};

struct GridConfig {
  std::array<std::int64_t, 2> per_dim{1, 1};  ///< sigma count, eta count
};

struct EvoConfig {
  int population_size = 10;
  int generations = 10;
  double elite_fraction = 0.2;   ///< in (0, 1]; elite count >= 1
  double crossover_rate = 0.5;   ///< probability of taking a gene from parent A
  double mutation_strength = 0.1;
};

struct TpeConfig {
  int n_startup = 10;
  double gamma = 0.25;           ///< good-fraction quantile, in (0, 1)
  int n_candidates = 24;
  std::string bandwidth_rule = "gap_or_lattice";
};

struct RlConfig {
  int episodes = 10;
  int trials_per_episode = 10;
  double eps0 = 1.0;             ///< initial exploration probability
  double eps_decay = 0.8;        ///< geometric decay per episode, in (0, 1]
  double top_fraction = 0.1;     ///< share of lattice cells exploited
  double mutation_strength = 0.1;
  std::vector<int> surrogate_hidden{16};
  SurrogateFitConfig surrogate_fit;
};

/// Evaluates one point; implementations must be pure in (point, index).
using TrialEvaluator =
    std::function<TrialRecord(const HyperParams&, int trial_index)>;

std::vector<TrialRecord> run_grid(const SearchSpace& space,
                                  const GridConfig& cfg, const Budget& budget,
                                  const TrialEvaluator& eval, int jobs = 1);

std::vector<TrialRecord> run_evolutionary(const SearchSpace& space,
                                          const EvoConfig& cfg,
                                          const Budget& budget,
                                          const TrialEvaluator& eval, Rng& rng,
                                          int jobs = 1);

/// Per-gene uniform crossover: each gene comes from parent A with
/// probability `rate`, otherwise from parent B.
HyperParams evo_crossover(const HyperParams& a, const HyperParams& b,
                          double rate, Rng& rng);

/// One Parzen-estimator suggestion, exposed for auditing: the candidate set
/// sampled from the good-density l and each candidate's log(l/g) score.
struct TpeSuggestion {
  HyperParams chosen;
  std::vector<HyperParams> candidates;
  std::vector<double> scores;
  bool degenerate = false;  ///< flat history; chosen was a uniform draw
};

TpeSuggestion tpe_suggest(const SearchSpace& space, const TpeConfig& cfg,
                          std::span<const TrialRecord> history, Rng& rng);

std::vector<TrialRecord> run_tpe(const SearchSpace& space, const TpeConfig& cfg,
                                 const Budget& budget,
                                 const TrialEvaluator& eval, Rng& rng);

struct RlResult {
  std::vector<TrialRecord> records;
  std::vector<MatXd> heatmaps;      ///< one reward-estimate grid per episode
  std::vector<double> episode_mse;  ///< surrogate training MSE per refit
};

RlResult run_rl(const SearchSpace& space, const RlConfig& cfg,
                const Budget& budget, const TrialEvaluator& eval,
                MlpModel& surrogate, Rng& rng, int jobs = 1);

/// Exploration probability at a given episode: eps0 * eps_decay^episode,
/// accumulated by repeated multiplication.
double exploration_epsilon(const RlConfig& cfg, int episode);

using StrategyConfig = std::variant<GridConfig, EvoConfig, TpeConfig, RlConfig>;

struct SearchResult {
  std::vector<TrialRecord> records;
  std::optional<std::size_t> best_index;  ///< max-reward ok record, first wins ties
  std::vector<MatXd> rl_heatmaps;
  std::vector<double> rl_episode_mse;
};

/// Dispatch on name in {grid, evolutionary, bayesian, rl} plus uniform
/// post-processing. The strategy stream and the RL surrogate seed derive
/// from base_seed (surrogate init seed = base_seed + 10^6).
SearchResult run_strategy(const std::string& name, const SearchSpace& space,
                          const StrategyConfig& cfg, const Budget& budget,
                          const TrialEvaluator& eval, std::uint64_t base_seed,
                          int jobs = 1);

}  // namespace dptune
