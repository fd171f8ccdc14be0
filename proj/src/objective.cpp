#include "dptune/objective.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dptune/errors.hpp"

namespace dptune {

double reward(double val_loss, double epsilon, const RewardWeights& weights) {
  if (std::isnan(val_loss) || std::isnan(epsilon))
    throw std::invalid_argument("reward: inputs must not be NaN");
  if (!(val_loss >= 0.0) || !(epsilon >= 0.0))
    throw std::invalid_argument("reward: val_loss and epsilon must be >= 0");
  if (!(weights.alpha_utility >= 0.0 && weights.alpha_utility <= 1.0 &&
        weights.alpha_privacy >= 0.0 && weights.alpha_privacy <= 1.0))
    throw std::invalid_argument("reward: weights must be in [0, 1]");
  return weights.alpha_utility * std::exp(-val_loss) +
         weights.alpha_privacy * std::exp(-epsilon);
}

TrialEvaluation evaluate_trial_full(const HyperParams& hp,
                                    const EvalContext& context,
                                    int trial_index) {
  if (context.train_set == nullptr || context.valid_set == nullptr)
    throw std::invalid_argument("evaluate_trial: context datasets not set");

  TrainConfig cfg = context.base;
  cfg.sigma = hp.sigma;
  cfg.eta = hp.eta;
  cfg.seed = context.base_seed + static_cast<std::uint64_t>(trial_index);

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(context.train_set->dim()));
  sizes.insert(sizes.end(), context.hidden.begin(), context.hidden.end());
  sizes.push_back(context.train_set->num_classes);
  Rng init_rng(derive_seed(cfg.seed, /*stream=*/0));
  const MlpModel model = make_mlp(sizes, context.activation, init_rng);

  const auto start = std::chrono::steady_clock::now();
  TrainOutcome outcome =
      train(model, *context.train_set, *context.valid_set, cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  TrialEvaluation ev;
  ev.record.trial_index = trial_index;
  ev.record.hp = hp;
  ev.record.val_loss = outcome.val_loss;
  ev.record.val_accuracy = outcome.val_accuracy;
  ev.record.epsilon = outcome.epsilon.epsilon;
  ev.record.cost = {wall, outcome.steps_taken, outcome.samples_visited.total()};
  ev.record.strategy = context.strategy_tag;
  ev.record.seed = cfg.seed;
  if (std::isfinite(outcome.val_loss)) {
    ev.record.status = TrialStatus::Ok;
    ev.record.reward =
        reward(outcome.val_loss, outcome.epsilon.epsilon, context.weights);
  } else {
    ev.record.status = TrialStatus::Failed;
    ev.record.reward = kFailedReward;
  }
  ev.visits = std::move(outcome.samples_visited);
  return ev;
}

TrialRecord evaluate_trial(const HyperParams& hp, const EvalContext& context,
                           int trial_index) {
  return evaluate_trial_full(hp, context, trial_index).record;
}

double baseline_reward(std::span<const TrialRecord> records) {
  bool found = false;
  double best = 0.0;
  for (const auto& r : records) {
    if (r.status != TrialStatus::Ok) continue;
    if (!found || r.reward > best) best = r.reward;
    found = true;
  }
  if (!found) throw SearchError("baseline_reward: no ok records");
  return best;
}

}  // namespace dptune
