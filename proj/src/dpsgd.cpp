#include "dptune/dpsgd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dptune {

namespace {

constexpr double kClipTolerance = 1e-12;

void validate(const TrainConfig& cfg, Eigen::Index train_size) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1 || cfg.batch_size > train_size)
    throw std::invalid_argument("train: batch_size must be in [1, train size]");
  if (!(cfg.clip_norm > 0.0))
    throw std::invalid_argument("train: clip_norm must be > 0");
  if (!(cfg.sigma >= 0.0))
    throw std::invalid_argument("train: sigma must be >= 0");
  if (cfg.sigma > 0.0 && !std::isfinite(cfg.clip_norm))
    throw std::invalid_argument("train: noise requires a finite clip_norm");
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("train: eta must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("train: delta must be in (0, 1)");
}

MatXd activation_derivative(const MatXd& a, Activation act) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() * (1.0 - a.array())).matrix();
}

}  // namespace

VecXd clip(const VecXd& grad, double clip_norm) {
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip: clip_norm must be > 0");
  const double norm = grad.norm();
  if (norm <= clip_norm) return grad;
  return grad * (clip_norm / norm);
}

void noisy_step(MlpModel& model, const VecXd& clipped_sum, int batch_size,
                double sigma, double clip_norm, double eta, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("noisy_step: empty batch");
  VecXd update = clipped_sum;
  if (sigma > 0.0) {
    const double noise_std = sigma * clip_norm;
    for (Eigen::Index i = 0; i < update.size(); ++i)
      update[i] += noise_std * gaussian(rng);
  }
  set_params(model, flatten_params(model) -
                        (eta / static_cast<double>(batch_size)) * update);
}

TrainOutcome train(const MlpModel& initial_model, const Dataset& train_set,
                   const Dataset& valid_set, const TrainConfig& cfg) {
  const Eigen::Index n = train_set.size();
  if (n < 1 || valid_set.size() < 1)
    throw std::invalid_argument("train: datasets must be non-empty");
  validate(cfg, n);

  MlpModel model = initial_model;
  Rng rng(derive_seed(cfg.seed, /*stream=*/1));
  TrainOutcome out;
  out.samples_visited = VisitCounter(static_cast<std::size_t>(n));

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  const int layers = model.layers();
  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(layers));
  Eigen::Index off = 0;
  for (int l = 0; l < layers; ++l) {
    offsets[static_cast<std::size_t>(l)] = off;
    off += model.weights[l].size() + model.biases[l].size();
  }
  VecXd clipped_sum(model.param_count());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<Eigen::Index>(perm), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      const std::span<const Eigen::Index> batch_rows(perm.data() + start,
                                                     static_cast<std::size_t>(b));
      MatXd xb(b, train_set.dim());
      VecXi yb(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        xb.row(i) = train_set.features.row(batch_rows[static_cast<std::size_t>(i)]);
        yb[i] = train_set.labels[batch_rows[static_cast<std::size_t>(i)]];
      }
      record_visits(out.samples_visited, batch_rows);

      // Backward pass without materializing per-sample gradients: the
      // per-sample gradient of layer l is the outer product delta_i a_i^T,
      // so ||g_i||^2 = sum_l ||delta_{l,i}||^2 (1 + ||a_{l,i}||^2) and the
      // clipped sum factors through row-scaled matrix products.
      const ForwardCache cache = forward(model, xb);
      std::vector<MatXd> deltas(static_cast<std::size_t>(layers));
      deltas[static_cast<std::size_t>(layers - 1)] = cache.probs;
      for (Eigen::Index i = 0; i < b; ++i)
        deltas[static_cast<std::size_t>(layers - 1)](i, yb[i]) -= 1.0;
      for (int l = layers - 1; l > 0; --l)
        deltas[static_cast<std::size_t>(l - 1)] =
            (deltas[static_cast<std::size_t>(l)] * model.weights[l])
                .cwiseProduct(
                    activation_derivative(cache.acts[l], model.activation));

      VecXd norm_sq = VecXd::Zero(b);
      for (int l = 0; l < layers; ++l)
        norm_sq += deltas[static_cast<std::size_t>(l)]
                       .rowwise()
                       .squaredNorm()
                       .cwiseProduct(cache.acts[l].rowwise().squaredNorm() +
                                     VecXd::Ones(b));
      VecXd scale(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        const double norm = std::sqrt(norm_sq[i]);
        scale[i] = norm <= cfg.clip_norm ? 1.0 : cfg.clip_norm / norm;
        const double clipped = norm * scale[i];
        if (clipped > cfg.clip_norm + kClipTolerance)
          throw std::logic_error("train: post-clip gradient norm exceeds C");
        out.max_clipped_norm = std::max(out.max_clipped_norm, clipped);
      }

      for (int l = 0; l < layers; ++l) {
        const MatXd scaled =
            deltas[static_cast<std::size_t>(l)].array().colwise() * scale.array();
        const MatXd gw = scaled.transpose() * cache.acts[l];
        const Eigen::Index w_size = model.weights[l].size();
        clipped_sum.segment(offsets[static_cast<std::size_t>(l)], w_size) =
            Eigen::Map<const VecXd>(gw.data(), gw.size());
        clipped_sum.segment(offsets[static_cast<std::size_t>(l)] + w_size,
                            model.biases[l].size()) =
            scaled.colwise().sum().transpose();
      }

      noisy_step(model, clipped_sum, static_cast<int>(b), cfg.sigma,
                 cfg.clip_norm, cfg.eta, rng);
      ++out.steps_taken;
    }
  }

  const ForwardCache val = forward(model, valid_set.features);
  out.val_loss = mean_cross_entropy(val.probs, valid_set.labels);
  out.val_accuracy = accuracy_of(val.probs, valid_set.labels);

  if (cfg.sigma == 0.0) {
    out.epsilon = {std::numeric_limits<double>::infinity(), cfg.delta};
  } else {
    const MechanismParams mech{static_cast<double>(cfg.batch_size) /
                                   static_cast<double>(n),
                               cfg.sigma, out.steps_taken};
    out.epsilon = epsilon_of_run(mech, cfg.delta);
  }
  return out;
}

}  // namespace dptune
