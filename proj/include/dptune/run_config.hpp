#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dptune/objective.hpp"
#include "dptune/optimizers.hpp"
#include "dptune/search_space.hpp"

namespace dptune {

/// Parsed and fully validated run description. Every invariant is checked
/// at parse time; unknown keys are rejected with the offending key named.
struct RunConfig {
  struct DatasetSpec {
    std::string source;  ///< synthetic | mnist | cifar10
    int n_train = 0;
    int n_valid = 0;
    // synthetic
    int n = 4000;
    int d = 32;
    int classes = 10;
    double separation = 3.0;
    // mnist
    std::filesystem::path mnist_images;
    std::filesystem::path mnist_labels;
    // cifar10
    std::vector<std::filesystem::path> cifar_batches;
  };

  struct DimSpec {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
    Scale scale = Scale::Linear;
  };

  DatasetSpec dataset;
  DimSpec sigma_dim;
  DimSpec eta_dim;

  int epochs = 3;
  int batch_size = 100;
  double clip_norm = 1.0;
  double delta = 1e-5;
  std::vector<int> hidden;  ///< defaulted by dataset source when empty in config
  Activation activation = Activation::Tanh;

  RewardWeights weights;

  std::string strategy_name;
  StrategyConfig strategy;

  Budget budget;
  std::uint64_t seed = 0;
  std::string output_dir;
  int jobs = 1;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

SearchSpace build_space(const RunConfig& cfg);

/// Normalized snapshot (defaults applied) stored in the ledger.
nlohmann::json config_snapshot(const RunConfig& cfg);

}  // namespace dptune
