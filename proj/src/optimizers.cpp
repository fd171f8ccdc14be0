#include "dptune/optimizers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "dptune/errors.hpp"
#include "dptune/numerics.hpp"

namespace dptune {

namespace {

class BudgetTracker {
 public:
  explicit BudgetTracker(const Budget& budget)
      : budget_(budget), start_(std::chrono::steady_clock::now()) {
    if (budget.max_trials < 1)
      throw ConfigError("budget: max_trials must be >= 1");
  }

  bool exhausted() const {
    if (trials_ >= budget_.max_trials) return true;
    if (budget_.max_sample_visits && visits_ >= *budget_.max_sample_visits)
      return true;
    if (budget_.wall_limit_seconds) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start_)
              .count();
      if (elapsed >= *budget_.wall_limit_seconds) return true;
    }
    return false;
  }

  int remaining_trials() const { return budget_.max_trials - trials_; }

  void note(const TrialRecord& record) {
    ++trials_;
    visits_ += record.cost.sample_visits;
  }

 private:
  const Budget& budget_;
  std::chrono::steady_clock::time_point start_;
  int trials_ = 0;
  std::uint64_t visits_ = 0;
};

/// Evaluates a pre-drawn batch of points, appending to `records`. Points
/// beyond the trial budget are dropped; with jobs == 1 the visit and wall
/// limits are also checked before every single evaluation.
void evaluate_points(std::span<const HyperParams> points,
                     const TrialEvaluator& eval, BudgetTracker& tracker,
                     std::vector<TrialRecord>& records, int jobs) {
  const int count = std::min<int>(static_cast<int>(points.size()),
                                  std::max(0, tracker.remaining_trials()));
  if (count <= 0) return;
  const int start_index = static_cast<int>(records.size());

  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) {
      if (tracker.exhausted()) return;
      records.push_back(eval(points[static_cast<std::size_t>(i)], start_index + i));
      tracker.note(records.back());
    }
    return;
  }

  std::vector<TrialRecord> batch(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const int workers = std::min(jobs, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          batch[static_cast<std::size_t>(i)] =
              eval(points[static_cast<std::size_t>(i)], start_index + i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  for (auto& r : batch) {
    records.push_back(std::move(r));
    tracker.note(records.back());
  }
}

struct Individual {
  HyperParams hp;
  double fitness = 0.0;
  int record_index = 0;
};

const Individual& tournament(std::span<const Individual> pop, Rng& rng) {
  const auto& a = pop[uniform_index(rng, pop.size())];
  const auto& b = pop[uniform_index(rng, pop.size())];
  return a.fitness >= b.fitness ? a : b;
}

/// Per-dimension truncated-Gaussian Parzen mixture in scale-domain
/// coordinates.
struct ParzenMixture {
  std::vector<double> centers;
  std::vector<double> bandwidths;
  double t_lo = 0.0, t_hi = 0.0;

  bool empty() const { return centers.empty(); }

  /// log density at scale coordinate t; uniform over the range when empty.
  double log_density(double t) const {
    if (empty()) return -std::log(t_hi - t_lo);
    std::vector<double> logs(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double s = bandwidths[i];
      const double z = normal_cdf((t_hi - centers[i]) / s) -
                       normal_cdf((t_lo - centers[i]) / s);
      logs[i] = log_normal_pdf((t - centers[i]) / s) - std::log(s) - std::log(z);
    }
    return log_sum_exp(logs) - std::log(static_cast<double>(centers.size()));
  }

  /// Draw from a uniformly chosen component, rejecting outside the range.
  double sample(Rng& rng) const {
    const std::size_t i = uniform_index(rng, centers.size());
    while (true) {
      const double t = centers[i] + bandwidths[i] * gaussian(rng);
      if (t >= t_lo && t <= t_hi) return t;
    }
  }
};

ParzenMixture make_mixture(const Dimension& dim, std::vector<double> centers) {
  ParzenMixture mix;
  mix.t_lo = dim.scale_lo();
  mix.t_hi = dim.scale_hi();
  if (centers.empty()) return mix;

  const double floor_bw =
      dim.scale_width() / static_cast<double>(dim.lattice_size());
  std::vector<double> sorted = centers;
  std::sort(sorted.begin(), sorted.end());
  mix.centers = std::move(centers);
  mix.bandwidths.resize(mix.centers.size());
  for (std::size_t i = 0; i < mix.centers.size(); ++i) {
    const auto it =
        std::lower_bound(sorted.begin(), sorted.end(), mix.centers[i]);
    const std::size_t pos = static_cast<std::size_t>(it - sorted.begin());
    double gap = 0.0;
    if (pos > 0) gap = std::max(gap, sorted[pos] - sorted[pos - 1]);
    if (pos + 1 < sorted.size()) gap = std::max(gap, sorted[pos + 1] - sorted[pos]);
    mix.bandwidths[i] = std::max(gap, floor_bw);
  }
  return mix;
}

void validate(const EvoConfig& cfg) {
  if (cfg.population_size < 2)
    throw ConfigError("evolutionary: population_size must be >= 2");
  if (cfg.generations < 1)
    throw ConfigError("evolutionary: generations must be >= 1");
  if (!(cfg.elite_fraction > 0.0 && cfg.elite_fraction <= 1.0))
    throw ConfigError("evolutionary: elite_fraction must be in (0, 1]");
  if (!(cfg.crossover_rate >= 0.0 && cfg.crossover_rate <= 1.0))
    throw ConfigError("evolutionary: crossover_rate must be in [0, 1]");
  if (!(cfg.mutation_strength >= 0.0 && cfg.mutation_strength <= 1.0))
    throw ConfigError("evolutionary: mutation_strength must be in [0, 1]");
}

void validate(const TpeConfig& cfg) {
  if (cfg.n_startup < 1) throw ConfigError("bayesian: n_startup must be >= 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw ConfigError("bayesian: gamma must be in (0, 1)");
  if (cfg.n_candidates < 1)
    throw ConfigError("bayesian: n_candidates must be >= 1");
  if (cfg.bandwidth_rule != "gap_or_lattice")
    throw ConfigError("bayesian: unknown bandwidth_rule '" + cfg.bandwidth_rule + "'");
}

void validate(const RlConfig& cfg) {
  if (cfg.episodes < 1) throw ConfigError("rl: episodes must be >= 1");
  if (cfg.trials_per_episode < 1)
    throw ConfigError("rl: trials_per_episode must be >= 1");
  if (!(cfg.eps0 >= 0.0 && cfg.eps0 <= 1.0))
    throw ConfigError("rl: eps0 must be in [0, 1]");
  if (!(cfg.eps_decay > 0.0 && cfg.eps_decay <= 1.0))
    throw ConfigError("rl: eps_decay must be in (0, 1]");
  if (!(cfg.top_fraction > 0.0 && cfg.top_fraction <= 1.0))
    throw ConfigError("rl: top_fraction must be in (0, 1]");
  if (!(cfg.mutation_strength >= 0.0 && cfg.mutation_strength <= 1.0))
    throw ConfigError("rl: mutation_strength must be in [0, 1]");
  for (const int h : cfg.surrogate_hidden)
    if (h < 1) throw ConfigError("rl: surrogate_hidden sizes must be >= 1");
}

}  // namespace

std::vector<TrialRecord> run_grid(const SearchSpace& space,
                                  const GridConfig& cfg, const Budget& budget,
                                  const TrialEvaluator& eval, int jobs) {
  // Non-adaptive by construction: the point set never depends on rewards.
  const std::vector<HyperParams> points = enumerate_grid(space, cfg.per_dim);
  BudgetTracker tracker(budget);
  std::vector<TrialRecord> records;
  records.reserve(points.size());
  evaluate_points(points, eval, tracker, records, jobs);
  return records;
}

HyperParams evo_crossover(const HyperParams& a, const HyperParams& b,
                          double rate, Rng& rng) {
  HyperParams child;
  child.sigma = uniform_unit(rng) < rate ? a.sigma : b.sigma;
  child.eta = uniform_unit(rng) < rate ? a.eta : b.eta;
  return child;
}

std::vector<TrialRecord> run_evolutionary(const SearchSpace& space,
                                          const EvoConfig& cfg,
                                          const Budget& budget,
                                          const TrialEvaluator& eval, Rng& rng,
                                          int jobs) {
  validate(cfg);
  BudgetTracker tracker(budget);
  std::vector<TrialRecord> records;

  const auto evaluate_generation = [&](const std::vector<HyperParams>& points)
      -> std::vector<Individual> {
    const std::size_t first = records.size();
    evaluate_points(points, eval, tracker, records, jobs);
    std::vector<Individual> evaluated;
    for (std::size_t i = first; i < records.size(); ++i)
      evaluated.push_back(
          {records[i].hp, records[i].reward, records[i].trial_index});
    return evaluated;
  };

  std::vector<HyperParams> points;
  points.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i)
    points.push_back(sample_uniform(space, rng));
  std::vector<Individual> population = evaluate_generation(points);

  const int elite_count = std::clamp<int>(
      static_cast<int>(std::floor(cfg.elite_fraction * cfg.population_size)),
      1, cfg.population_size);

  for (int gen = 1; gen < cfg.generations; ++gen) {
    if (tracker.exhausted() || population.empty()) break;
    std::sort(population.begin(), population.end(),
              [](const Individual& a, const Individual& b) {
                return a.fitness != b.fitness ? a.fitness > b.fitness
                                              : a.record_index < b.record_index;
              });
    std::vector<Individual> elites(
        population.begin(),
        population.begin() + std::min<std::size_t>(
                                 static_cast<std::size_t>(elite_count),
                                 population.size()));

    points.clear();
    for (int c = 0; c < cfg.population_size - elite_count; ++c) {
      const Individual& a = tournament(population, rng);
      const Individual& b = tournament(population, rng);
      const HyperParams child = evo_crossover(a.hp, b.hp, cfg.crossover_rate, rng);
      points.push_back(mutate(space, child, cfg.mutation_strength, rng));
    }
    std::vector<Individual> children = evaluate_generation(points);

    population = std::move(elites);
    population.insert(population.end(), children.begin(), children.end());
  }
  return records;
}

TpeSuggestion tpe_suggest(const SearchSpace& space, const TpeConfig& cfg,
                          std::span<const TrialRecord> history, Rng& rng) {
  validate(cfg);
  TpeSuggestion suggestion;

  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    lo = i == 0 ? history[i].reward : std::min(lo, history[i].reward);
    hi = i == 0 ? history[i].reward : std::max(hi, history[i].reward);
  }
  if (history.empty() || lo == hi) {
    suggestion.degenerate = true;
    suggestion.chosen = sample_uniform(space, rng);
    return suggestion;
  }

  // Split history at the gamma-quantile of reward.
  std::vector<std::size_t> order(history.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].reward != history[b].reward
               ? history[a].reward > history[b].reward
               : history[a].trial_index < history[b].trial_index;
  });
  const std::size_t n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(cfg.gamma * static_cast<double>(history.size()))));

  std::array<ParzenMixture, 2> good, bad;
  for (std::size_t d = 0; d < 2; ++d) {
    const Dimension& dim = space.dims()[d];
    std::vector<double> good_centers, bad_centers;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const HyperParams& hp = history[order[r]].hp;
      const double t = dim.to_scale(d == 0 ? hp.sigma : hp.eta);
      (r < n_good ? good_centers : bad_centers).push_back(t);
    }
    good[d] = make_mixture(dim, std::move(good_centers));
    bad[d] = make_mixture(dim, std::move(bad_centers));
  }

  // Sample candidates from l, keep the best l/g ratio (first index wins ties).
  suggestion.candidates.reserve(static_cast<std::size_t>(cfg.n_candidates));
  suggestion.scores.reserve(static_cast<std::size_t>(cfg.n_candidates));
  std::size_t best = 0;
  for (int c = 0; c < cfg.n_candidates; ++c) {
    HyperParams raw;
    raw.sigma = space.sigma().from_scale(good[0].sample(rng));
    raw.eta = space.eta().from_scale(good[1].sample(rng));
    const HyperParams cand = quantize(space, raw);
    double score = 0.0;
    for (std::size_t d = 0; d < 2; ++d) {
      const double t = space.dims()[d].to_scale(d == 0 ? cand.sigma : cand.eta);
      score += good[d].log_density(t) - bad[d].log_density(t);
    }
    suggestion.candidates.push_back(cand);
    suggestion.scores.push_back(score);
    if (score > suggestion.scores[best]) best = suggestion.candidates.size() - 1;
  }
  suggestion.chosen = suggestion.candidates[best];
  return suggestion;
}

std::vector<TrialRecord> run_tpe(const SearchSpace& space, const TpeConfig& cfg,
                                 const Budget& budget,
                                 const TrialEvaluator& eval, Rng& rng) {
  validate(cfg);
  BudgetTracker tracker(budget);
  std::vector<TrialRecord> records;

  while (!tracker.exhausted()) {
    const HyperParams point =
        static_cast<int>(records.size()) < cfg.n_startup
            ? sample_uniform(space, rng)
            : tpe_suggest(space, cfg, records, rng).chosen;
    records.push_back(eval(point, static_cast<int>(records.size())));
    tracker.note(records.back());
  }
  return records;
}

double exploration_epsilon(const RlConfig& cfg, int episode) {
  double eps = cfg.eps0;
  for (int k = 0; k < episode; ++k) eps *= cfg.eps_decay;
  return eps;
}

RlResult run_rl(const SearchSpace& space, const RlConfig& cfg,
                const Budget& budget, const TrialEvaluator& eval,
                MlpModel& surrogate, Rng& rng, int jobs) {
  validate(cfg);
  BudgetTracker tracker(budget);
  RlResult out;

  const std::int64_t sigma_size = space.sigma().lattice_size();
  const std::int64_t eta_size = space.eta().lattice_size();
  const std::int64_t total_cells = sigma_size * eta_size;
  const std::int64_t top_count = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(
          std::llround(cfg.top_fraction * static_cast<double>(total_cells))),
      1, total_cells);

  std::vector<std::int64_t> top_cells;
  Rng fit_rng(rng());  // dedicated stream so refit epochs cannot shift draws
  std::vector<std::array<double, 2>> pair_inputs;
  std::vector<double> pair_targets;
  double eps = cfg.eps0;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    if (tracker.exhausted()) break;
    if (episode > 0) eps *= cfg.eps_decay;

    std::vector<HyperParams> points;
    points.reserve(static_cast<std::size_t>(cfg.trials_per_episode));
    for (int t = 0; t < cfg.trials_per_episode; ++t) {
      const bool explore = episode == 0 || uniform_unit(rng) < eps;
      if (explore || top_cells.empty()) {
        points.push_back(sample_uniform(space, rng));
      } else {
        const std::int64_t cell = top_cells[uniform_index(rng, top_cells.size())];
        const HyperParams anchor{
            space.sigma().value_at(cell / eta_size),
            space.eta().value_at(cell % eta_size)};
        points.push_back(mutate(space, anchor, cfg.mutation_strength, rng));
      }
    }

    const std::size_t first = out.records.size();
    evaluate_points(points, eval, tracker, out.records, jobs);
    if (out.records.size() == first) break;

    for (std::size_t i = first; i < out.records.size(); ++i) {
      pair_inputs.push_back(normalized(space, out.records[i].hp));
      pair_targets.push_back(out.records[i].reward);
    }
    MatXd inputs(static_cast<Eigen::Index>(pair_inputs.size()), 2);
    VecXd targets(static_cast<Eigen::Index>(pair_targets.size()));
    for (std::size_t i = 0; i < pair_inputs.size(); ++i) {
      inputs(static_cast<Eigen::Index>(i), 0) = pair_inputs[i][0];
      inputs(static_cast<Eigen::Index>(i), 1) = pair_inputs[i][1];
      targets[static_cast<Eigen::Index>(i)] = pair_targets[i];
    }
    out.episode_mse.push_back(
        surrogate_fit(surrogate, inputs, targets, cfg.surrogate_fit, fit_rng));
    out.heatmaps.push_back(
        surrogate_predict_grid(surrogate, space, {sigma_size, eta_size}));

    // Refresh the exploitation pool: top cells by predicted reward.
    const MatXd& heat = out.heatmaps.back();
    std::vector<std::int64_t> cells(static_cast<std::size_t>(total_cells));
    for (std::int64_t i = 0; i < total_cells; ++i)
      cells[static_cast<std::size_t>(i)] = i;
    std::nth_element(
        cells.begin(), cells.begin() + (top_count - 1), cells.end(),
        [&](std::int64_t a, std::int64_t b) {
          const double va = heat(a / eta_size, a % eta_size);
          const double vb = heat(b / eta_size, b % eta_size);
          return va != vb ? va > vb : a < b;
        });
    top_cells.assign(cells.begin(), cells.begin() + top_count);
    std::sort(top_cells.begin(), top_cells.end());
  }
  return out;
}

SearchResult run_strategy(const std::string& name, const SearchSpace& space,
                          const StrategyConfig& cfg, const Budget& budget,
                          const TrialEvaluator& eval, std::uint64_t base_seed,
                          int jobs) {
  SearchResult result;
  Rng rng(derive_seed(base_seed, /*stream=*/2));

  if (name == "grid") {
    if (!std::holds_alternative<GridConfig>(cfg))
      throw ConfigError("run_strategy: config does not match strategy 'grid'");
    result.records = run_grid(space, std::get<GridConfig>(cfg), budget, eval, jobs);
  } else if (name == "evolutionary") {
    if (!std::holds_alternative<EvoConfig>(cfg))
      throw ConfigError("run_strategy: config does not match strategy 'evolutionary'");
    result.records =
        run_evolutionary(space, std::get<EvoConfig>(cfg), budget, eval, rng, jobs);
  } else if (name == "bayesian") {
    if (!std::holds_alternative<TpeConfig>(cfg))
      throw ConfigError("run_strategy: config does not match strategy 'bayesian'");
    result.records = run_tpe(space, std::get<TpeConfig>(cfg), budget, eval, rng);
  } else if (name == "rl") {
    if (!std::holds_alternative<RlConfig>(cfg))
      throw ConfigError("run_strategy: config does not match strategy 'rl'");
    const RlConfig& rl = std::get<RlConfig>(cfg);
    std::vector<int> sizes{2};
    sizes.insert(sizes.end(), rl.surrogate_hidden.begin(), rl.surrogate_hidden.end());
    sizes.push_back(1);
    Rng surrogate_rng(base_seed + 1'000'000);
    MlpModel surrogate = make_mlp(sizes, Activation::Tanh, surrogate_rng);
    RlResult rl_result = run_rl(space, rl, budget, eval, surrogate, rng, jobs);
    result.records = std::move(rl_result.records);
    result.rl_heatmaps = std::move(rl_result.heatmaps);
    result.rl_episode_mse = std::move(rl_result.episode_mse);
  } else {
    throw ConfigError("run_strategy: unknown strategy '" + name + "'");
  }

  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const TrialRecord& r = result.records[i];
    if (r.status != TrialStatus::Ok) continue;
    if (!result.best_index ||
        r.reward > result.records[*result.best_index].reward)
      result.best_index = i;
  }
  return result;
}

}  // namespace dptune
