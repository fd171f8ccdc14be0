#include "dptune/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace dptune {

namespace {

MatXd apply_activation(const MatXd& z, Activation act) {
  if (act == Activation::Tanh) return z.array().tanh();
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

/// Derivative expressed through the post-activation value.
MatXd activation_derivative(const MatXd& a, Activation act) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() * (1.0 - a.array())).matrix();
}

MatXd softmax_rows(const MatXd& logits) {
  MatXd shifted = logits.colwise() - logits.rowwise().maxCoeff();
  MatXd e = shifted.array().exp();
  return e.array().colwise() / e.rowwise().sum().array();
}

MatXd linear_output(const MatXd& a, const MatXd& w, const VecXd& b) {
  return (a * w.transpose()).rowwise() + b.transpose();
}

}  // namespace

std::int64_t MlpModel::param_count() const {
  std::int64_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

MlpModel make_mlp(const std::vector<int>& layer_sizes, Activation activation,
                  Rng& rng) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("make_mlp: need at least input and output sizes");
  for (const int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("make_mlp: layer sizes must be >= 1");

  MlpModel model;
  model.activation = activation;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    MatXd w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) = (2.0 * uniform_unit(rng) - 1.0) * limit;
    model.weights.push_back(std::move(w));
    model.biases.push_back(VecXd::Zero(fan_out));
  }
  return model;
}

VecXd flatten_params(const MlpModel& model) {
  VecXd flat(model.param_count());
  Eigen::Index off = 0;
  for (int l = 0; l < model.layers(); ++l) {
    const auto& w = model.weights[l];
    flat.segment(off, w.size()) = Eigen::Map<const VecXd>(w.data(), w.size());
    off += w.size();
    flat.segment(off, model.biases[l].size()) = model.biases[l];
    off += model.biases[l].size();
  }
  return flat;
}

void set_params(MlpModel& model, const VecXd& flat) {
  if (flat.size() != model.param_count())
    throw std::invalid_argument("set_params: size mismatch");
  Eigen::Index off = 0;
  for (int l = 0; l < model.layers(); ++l) {
    auto& w = model.weights[l];
    Eigen::Map<VecXd>(w.data(), w.size()) = flat.segment(off, w.size());
    off += w.size();
    model.biases[l] = flat.segment(off, model.biases[l].size());
    off += model.biases[l].size();
  }
}

ForwardCache forward(const MlpModel& model, const MatXd& inputs) {
  if (inputs.cols() != model.input_size())
    throw std::invalid_argument("forward: input width does not match model");
  ForwardCache cache;
  cache.acts.resize(model.layers());
  cache.acts[0] = inputs;
  for (int l = 0; l + 1 < model.layers(); ++l)
    cache.acts[l + 1] = apply_activation(
        linear_output(cache.acts[l], model.weights[l], model.biases[l]),
        model.activation);
  cache.logits = linear_output(cache.acts.back(), model.weights.back(),
                               model.biases.back());
  cache.probs = softmax_rows(cache.logits);
  return cache;
}

MatXd per_sample_gradients(const MlpModel& model, const MatXd& inputs,
                           const VecXi& labels) {
  if (labels.size() != inputs.rows())
    throw std::invalid_argument("per_sample_gradients: label count mismatch");
  const ForwardCache cache = forward(model, inputs);
  const Eigen::Index n = inputs.rows();

  MatXd grads(n, model.param_count());
  // d(per-sample CE)/d(logits) = probs - onehot(label)
  MatXd delta = cache.probs;
  for (Eigen::Index i = 0; i < n; ++i) delta(i, labels[i]) -= 1.0;

  std::vector<Eigen::Index> offsets(model.layers());
  Eigen::Index off = 0;
  for (int l = 0; l < model.layers(); ++l) {
    offsets[l] = off;
    off += model.weights[l].size() + model.biases[l].size();
  }

  for (int l = model.layers() - 1; l >= 0; --l) {
    const MatXd& a = cache.acts[l];          // n x fan_in
    const Eigen::Index out = model.weights[l].rows();
    // Sample i's weight gradient is the outer product delta_i a_i^T; its
    // column-major block for input c is a_i[c] * delta_i.
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      grads.middleCols(offsets[l] + c * out, out) =
          delta.array().colwise() * a.col(c).array();
    grads.middleCols(offsets[l] + model.weights[l].size(), out) = delta;
    if (l > 0)
      delta = (delta * model.weights[l])
                  .cwiseProduct(activation_derivative(cache.acts[l],
                                                      model.activation));
  }
  return grads;
}

double mean_cross_entropy(const MatXd& probs, const VecXi& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    total += -std::log(probs(i, labels[i]));
  return total / static_cast<double>(probs.rows());
}

double accuracy_of(const MatXd& probs, const VecXi& labels) {
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    if (arg == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

VecXd predict_regression(const MlpModel& model, const MatXd& inputs) {
  if (model.output_size() != 1)
    throw std::invalid_argument("predict_regression: model output must be scalar");
  MatXd a = inputs;
  for (int l = 0; l + 1 < model.layers(); ++l)
    a = apply_activation(linear_output(a, model.weights[l], model.biases[l]),
                         model.activation);
  return linear_output(a, model.weights.back(), model.biases.back()).col(0);
}

double mse_loss(const MlpModel& model, const MatXd& inputs,
                const VecXd& targets) {
  const VecXd r = predict_regression(model, inputs) - targets;
  return r.squaredNorm() / static_cast<double>(inputs.rows());
}

double mse_loss_and_gradient(const MlpModel& model, const MatXd& inputs,
                             const VecXd& targets, VecXd& grad) {
  const Eigen::Index n = inputs.rows();
  std::vector<MatXd> acts(model.layers());
  acts[0] = inputs;
  for (int l = 0; l + 1 < model.layers(); ++l)
    acts[l + 1] = apply_activation(
        linear_output(acts[l], model.weights[l], model.biases[l]),
        model.activation);
  const VecXd pred =
      linear_output(acts.back(), model.weights.back(), model.biases.back())
          .col(0);
  const VecXd r = pred - targets;
  const double loss = r.squaredNorm() / static_cast<double>(n);

  grad.resize(model.param_count());
  MatXd delta = (2.0 / static_cast<double>(n)) * r;  // n x 1
  Eigen::Index off = model.param_count();
  for (int l = model.layers() - 1; l >= 0; --l) {
    const Eigen::Index out = model.weights[l].rows();
    off -= model.weights[l].size() + out;
    const MatXd gw = delta.transpose() * acts[l];  // out x fan_in
    grad.segment(off, gw.size()) = Eigen::Map<const VecXd>(gw.data(), gw.size());
    grad.segment(off + gw.size(), out) = delta.colwise().sum().transpose();
    if (l > 0)
      delta = (delta * model.weights[l])
                  .cwiseProduct(activation_derivative(acts[l], model.activation));
  }
  return loss;
}

double surrogate_fit(MlpModel& model, const MatXd& inputs, const VecXd& targets,
                     const SurrogateFitConfig& cfg, Rng& rng) {
  if (inputs.rows() < 1)
    throw std::invalid_argument("surrogate_fit: need at least one pair");
  if (inputs.rows() != targets.size())
    throw std::invalid_argument("surrogate_fit: target count mismatch");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw std::invalid_argument("surrogate_fit: invalid fit config");

  const Eigen::Index n = inputs.rows();
  double best_mse = mse_loss(model, inputs, targets);
  VecXd best_params = flatten_params(model);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  VecXd grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<Eigen::Index>(perm), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      MatXd xb(b, inputs.cols());
      VecXd tb(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        xb.row(i) = inputs.row(perm[static_cast<std::size_t>(start + i)]);
        tb[i] = targets[perm[static_cast<std::size_t>(start + i)]];
      }
      mse_loss_and_gradient(model, xb, tb, grad);
      set_params(model, flatten_params(model) - cfg.learning_rate * grad);
    }
    const double mse = mse_loss(model, inputs, targets);
    if (mse < best_mse) {
      best_mse = mse;
      best_params = flatten_params(model);
    }
  }
  set_params(model, best_params);
  return best_mse;
}

MatXd surrogate_predict_grid(const MlpModel& model, const SearchSpace& space,
                             const std::array<std::int64_t, 2>& resolution) {
  const auto si =
      lattice_subsample_indices(space.sigma().lattice_size(), resolution[0]);
  const auto ei =
      lattice_subsample_indices(space.eta().lattice_size(), resolution[1]);
  MatXd points(static_cast<Eigen::Index>(si.size() * ei.size()), 2);
  Eigen::Index row = 0;
  for (const std::int64_t ks : si) {
    for (const std::int64_t ke : ei) {
      const HyperParams hp{space.sigma().value_at(ks), space.eta().value_at(ke)};
      const auto coords = normalized(space, hp);
      points(row, 0) = coords[0];
      points(row, 1) = coords[1];
      ++row;
    }
  }
  const VecXd pred = predict_regression(model, points);
  MatXd out(static_cast<Eigen::Index>(si.size()),
            static_cast<Eigen::Index>(ei.size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = pred[i * out.cols() + j];
  return out;
}

}  // namespace dptune
