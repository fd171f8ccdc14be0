#include "dptune/runner.hpp"

#include <map>
#include <mutex>

#include "dptune/errors.hpp"
#include "dptune/rdp_accountant.hpp"

namespace dptune {

namespace {

// Sub-stream ids hung off the base seed (trial k itself uses base + k and
// the RL surrogate uses base + 10^6, both assigned elsewhere).
constexpr std::uint64_t kSyntheticStream = 3;
constexpr std::uint64_t kSubsetStream = 4;

Dataset load_parent(const RunConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.source == "synthetic")
    return synthetic(d.n, d.d, d.classes, d.separation,
                     derive_seed(cfg.seed, kSyntheticStream));
  if (d.source == "mnist") return load_mnist_idx(d.mnist_images, d.mnist_labels);
  return load_cifar10_bin(d.cifar_batches);
}

nlohmann::json audit_json(const AccountantAudit& audit) {
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < audit.composed.orders.size(); ++i)
    curve.push_back({{"order", audit.composed.orders[i]},
                     {"rdp", audit.composed.values[i]}});
  return {{"minimizing_order", audit.minimizing_order}, {"curve", curve}};
}

}  // namespace

RunArtifacts execute_run(const RunConfig& cfg) {
  const Dataset parent = load_parent(cfg);
  auto [train_set, valid_set] = subset(parent, cfg.dataset.n_train,
                                       cfg.dataset.n_valid,
                                       derive_seed(cfg.seed, kSubsetStream));
  const SearchSpace space = build_space(cfg);

  EvalContext ctx;
  ctx.train_set = &train_set;
  ctx.valid_set = &valid_set;
  ctx.base.epochs = cfg.epochs;
  ctx.base.batch_size = cfg.batch_size;
  ctx.base.clip_norm = cfg.clip_norm;
  ctx.base.delta = cfg.delta;
  ctx.hidden = cfg.hidden;
  ctx.activation = cfg.activation;
  ctx.weights = cfg.weights;
  ctx.base_seed = cfg.seed;
  ctx.strategy_tag = cfg.strategy_name;

  std::mutex shard_mutex;
  std::map<int, VisitCounter> shards;
  const TrialEvaluator evaluator = [&](const HyperParams& hp, int trial_index) {
    TrialEvaluation ev = evaluate_trial_full(hp, ctx, trial_index);
    {
      const std::lock_guard<std::mutex> lock(shard_mutex);
      shards.emplace(trial_index, std::move(ev.visits));
    }
    return ev.record;
  };

  RunArtifacts artifacts;
  artifacts.search = run_strategy(cfg.strategy_name, space, cfg.strategy,
                                  cfg.budget, evaluator, cfg.seed, cfg.jobs);

  Ledger& ledger = artifacts.ledger;
  ledger.run_id = cfg.strategy_name + "-seed" + std::to_string(cfg.seed);
  ledger.strategy = cfg.strategy_name;
  ledger.seed = cfg.seed;
  ledger.config = config_snapshot(cfg);
  ledger.weight_sum = cfg.weights.alpha_utility + cfg.weights.alpha_privacy;
  ledger.records = artifacts.search.records;
  ledger.sample_ids = train_set.sample_ids;
  ledger.rl_heatmaps = artifacts.search.rl_heatmaps;
  ledger.visit_shards.reserve(ledger.records.size());
  for (const auto& r : ledger.records) {
    const auto it = shards.find(r.trial_index);
    if (it == shards.end())
      throw SearchError("runner: missing visit shard for trial " +
                        std::to_string(r.trial_index));
    ledger.visit_shards.push_back(std::move(it->second));
  }
  finalize_ledger(ledger);

  if (const auto best = best_record(ledger.records)) {
    const TrialRecord& b = ledger.records[*best];
    if (b.hp.sigma > 0.0) {
      AccountantAudit audit;
      const MechanismParams mech{
          static_cast<double>(cfg.batch_size) / static_cast<double>(train_set.size()),
          b.hp.sigma, b.cost.steps};
      epsilon_of_run(mech, cfg.delta, &audit);
      ledger.accountant_audit = audit_json(audit);
    }
  }
  return artifacts;
}

void run_and_export(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const RunArtifacts artifacts = execute_run(cfg);
  export_ledger(artifacts.ledger, out_dir);
}

}  // namespace dptune
