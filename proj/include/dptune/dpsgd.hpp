#pragma once

#include <cstdint>

#include "dptune/datasets.hpp"
#include "dptune/mlp.hpp"
#include "dptune/random.hpp"
#include "dptune/rdp_accountant.hpp"
#include "dptune/types.hpp"

namespace dptune {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 1;
  double clip_norm = 1.0;  ///< +infinity disables clipping (sigma must be 0)
  double sigma = 0.0;      ///< noise multiplier; 0 turns off noise
  double eta = 0.1;
  std::uint64_t seed = 0;
  double delta = 1e-5;
};

struct TrainOutcome {
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  PrivacySpend epsilon;   ///< +infinity epsilon when sigma == 0
  std::int64_t steps_taken = 0;
  VisitCounter samples_visited;   ///< per-row inclusion counts, train set
  double max_clipped_norm = 0.0;  ///< diagnostics: largest post-clip norm seen
};

/// grad * min(1, clip_norm / ||grad||_2); zero and within-norm vectors pass
/// through unchanged.
VecXd clip(const VecXd& grad, double clip_norm);

/// model -= eta * (clipped_sum + N(0, sigma^2 clip_norm^2 I)) / batch_size.
/// Noise coordinates are drawn in flattened parameter order; sigma == 0
/// draws nothing.
void noisy_step(MlpModel& model, const VecXd& clipped_sum, int batch_size,
                double sigma, double clip_norm, double eta, Rng& rng);

/// DPSGD loop: epochs x ceil(n/batch_size) steps over uniformly shuffled
/// minibatches, per-sample clipping, Gaussian noise, visit counting, and a
/// final validation pass. The accountant is fed q = batch_size / n.
/// Deterministic given cfg.seed.
TrainOutcome train(const MlpModel& initial_model, const Dataset& train_set,
                   const Dataset& valid_set, const TrainConfig& cfg);

}  // namespace dptune
