#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dptune/datasets.hpp"
#include "dptune/dpsgd.hpp"
#include "dptune/search_space.hpp"

namespace dptune {

/// Weights of the privacy-utility reward; each lies in [0, 1] (their sum is
/// unconstrained).
struct RewardWeights {
  double alpha_utility = 0.5;
  double alpha_privacy = 0.5;
};

/// Reward assigned to a trial whose training diverged; strictly below the
/// valid range [0, alpha_utility + alpha_privacy].
constexpr double kFailedReward = -1.0;

/// alpha_utility * exp(-val_loss) + alpha_privacy * exp(-epsilon).
/// +infinity epsilon is accepted as the no-privacy limit (exp(-inf) = 0);
/// NaN inputs are rejected.
double reward(double val_loss, double epsilon, const RewardWeights& weights);

enum class TrialStatus { Ok, Failed };

struct TrialCost {
  double wall_seconds = 0.0;
  std::int64_t steps = 0;
  std::uint64_t sample_visits = 0;
};

/// One scored training run.
struct TrialRecord {
  int trial_index = 0;
  HyperParams hp;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double epsilon = 0.0;
  double reward = 0.0;
  TrialStatus status = TrialStatus::Ok;
  TrialCost cost;
  std::string strategy;
  std::uint64_t seed = 0;
};

/// Everything a trial needs besides its hyperparameters. The datasets are
/// borrowed and must outlive the context.
struct EvalContext {
  const Dataset* train_set = nullptr;
  const Dataset* valid_set = nullptr;
  TrainConfig base;               ///< sigma/eta/seed overwritten per trial
  std::vector<int> hidden{64};    ///< hidden layer sizes
  Activation activation = Activation::Tanh;
  RewardWeights weights;
  std::uint64_t base_seed = 0;    ///< trial seed = base_seed + trial_index
  std::string strategy_tag;
};

struct TrialEvaluation {
  TrialRecord record;
  VisitCounter visits;  ///< this trial's per-sample visit increments
};

/// Train with hp, account epsilon, score Eq-style reward. Non-finite
/// validation loss yields status Failed with the sentinel reward; the
/// search continues. Pure in (hp, context, trial_index).
TrialEvaluation evaluate_trial_full(const HyperParams& hp,
                                    const EvalContext& context,
                                    int trial_index);

TrialRecord evaluate_trial(const HyperParams& hp, const EvalContext& context,
                           int trial_index);

/// Highest reward among ok records; throws SearchError when none are ok.
double baseline_reward(std::span<const TrialRecord> records);

}  // namespace dptune
