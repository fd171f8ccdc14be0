#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dptune/random.hpp"
#include "dptune/search_space.hpp"
#include "dptune/types.hpp"

namespace dptune {

enum class Activation { Tanh, Sigmoid };

/// Fully connected network. weights[l] is (fan_out x fan_in); hidden layers
/// use the bounded activation, the final layer is linear (softmax or
/// identity is applied by the head functions below).
///
/// Flattened parameter order: per layer l ascending, vec(weights[l]) in
/// column-major order followed by biases[l].
struct MlpModel {
  std::vector<MatXd> weights;
  std::vector<VecXd> biases;
  Activation activation = Activation::Tanh;

  int layers() const { return static_cast<int>(weights.size()); }
  Eigen::Index input_size() const { return weights.front().cols(); }
  Eigen::Index output_size() const { return weights.back().rows(); }
  std::int64_t param_count() const;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
/// Weight entries are drawn layer by layer in column-major order.
MlpModel make_mlp(const std::vector<int>& layer_sizes, Activation activation,
                  Rng& rng);

VecXd flatten_params(const MlpModel& model);
void set_params(MlpModel& model, const VecXd& flat);

struct ForwardCache {
  std::vector<MatXd> acts;  ///< acts[0] = input; acts[l] = input to layer l
  MatXd logits;
  MatXd probs;              ///< row-wise softmax of logits
};

/// Classification head: softmax class probabilities, caches kept for
/// backprop. Throws on input width mismatch.
ForwardCache forward(const MlpModel& model, const MatXd& inputs);

/// Exact gradient of each sample's individual cross-entropy loss w.r.t. all
/// parameters; row i is sample i's gradient in flattened parameter order.
MatXd per_sample_gradients(const MlpModel& model, const MatXd& inputs,
                           const VecXi& labels);

double mean_cross_entropy(const MatXd& probs, const VecXi& labels);
double accuracy_of(const MatXd& probs, const VecXi& labels);

/// Regression head (scalar linear output).
VecXd predict_regression(const MlpModel& model, const MatXd& inputs);
double mse_loss(const MlpModel& model, const MatXd& inputs, const VecXd& targets);
/// Returns the MSE and writes its gradient in flattened parameter order.
double mse_loss_and_gradient(const MlpModel& model, const MatXd& inputs,
                             const VecXd& targets, VecXd& grad);

struct SurrogateFitConfig {
  int epochs = 300;
  int batch_size = 16;
  double learning_rate = 0.05;
};

/// Plain (non-private) minibatch SGD on the MSE; keeps the best iterate by
/// full-data MSE so the returned loss never exceeds the starting loss.
double surrogate_fit(MlpModel& model, const MatXd& inputs, const VecXd& targets,
                     const SurrogateFitConfig& cfg, Rng& rng);

/// Predictions over an equally spaced lattice subsample; entry (i, j) is the
/// model output at sigma index i, eta index j (inputs normalized to [0,1]).
MatXd surrogate_predict_grid(const MlpModel& model, const SearchSpace& space,
                             const std::array<std::int64_t, 2>& resolution);

}  // namespace dptune
