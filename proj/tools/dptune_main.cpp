#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dptune/errors.hpp"
#include "dptune/ledger.hpp"
#include "dptune/run_config.hpp"
#include "dptune/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dptune;

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitSearchError = 4;

fs::path output_root() {
  if (const char* env = std::getenv("DP_TUNE_OUT")) return fs::path(env);
  return fs::path(".");
}

int cmd_run(const std::string& config_path,
            const std::optional<std::string>& strategy,
            const std::optional<std::uint64_t>& seed,
            const std::optional<int>& jobs,
            const std::optional<std::string>& out) {
  RunConfig cfg = load_run_config(config_path);
  // Precedence: flag > config file > default.
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  if (strategy && *strategy != cfg.strategy_name) {
    nlohmann::json doc;
    {
      std::ifstream in(config_path, std::ios::binary);
      in >> doc;
    }
    doc["strategy"] = nlohmann::json{{"name", *strategy}};
    if (seed) doc["seed"] = *seed;
    cfg = parse_run_config(doc);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
  }

  fs::path out_dir;
  if (out) {
    out_dir = *out;
  } else if (!cfg.output_dir.empty()) {
    out_dir = cfg.output_dir;
  } else {
    out_dir = output_root() /
              (cfg.strategy_name + "-seed" + std::to_string(cfg.seed));
  }
  run_and_export(cfg, out_dir);
  std::cout << "wrote " << out_dir.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<Ledger> ledgers;
  ledgers.reserve(dirs.size());
  for (const auto& d : dirs) ledgers.push_back(load_ledger(d));
  const ComparisonReport report = compare(ledgers);
  const fs::path out_dir(out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_comparison(report, out_dir / "comparison.csv", out_dir / "comparison.json");
  std::cout << "wrote " << (out_dir / "comparison.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& dir, const std::optional<double>& baseline) {
  const Ledger ledger = load_ledger(dir);
  std::cout << "run: " << ledger.run_id << "\n";
  std::cout << "strategy: " << ledger.strategy << "\n";
  std::cout << "trials: " << ledger.records.size() << "\n";
  const auto best = best_record(ledger.records);
  if (!best) {
    std::cout << "no successful trials\n";
    return 0;
  }
  const TrialRecord& b = ledger.records[*best];
  std::cout << "best reward: " << format_double(b.reward) << "\n";
  std::cout << "  sigma: " << format_double(b.hp.sigma) << "\n";
  std::cout << "  eta: " << format_double(b.hp.eta) << "\n";
  std::cout << "  epsilon: " << format_double(b.epsilon) << "\n";
  std::cout << "  accuracy: " << format_double(b.val_accuracy) << "\n";
  if (baseline) {
    if (const auto cost = budget_to_baseline(ledger, *baseline)) {
      std::cout << "trials to baseline: " << cost->trials << "\n";
    } else {
      std::cout << "baseline unreached\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DPSGD hyperparameter tuning: grid, evolutionary, bayesian, "
               "and rl search over (sigma, eta)"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> strategy_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> jobs_flag;
  std::optional<std::string> out_flag;
  auto* run = app.add_subcommand("run", "execute one search run");
  run->add_option("--config", config_path, "run config JSON")->required();
  run->add_option("--strategy", strategy_flag,
                  "override strategy name (grid|evolutionary|bayesian|rl)");
  run->add_option("--seed", seed_flag, "override base seed");
  run->add_option("--jobs", jobs_flag, "parallel trial evaluations");
  run->add_option("--out", out_flag, "output directory");

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "cross-strategy comparison report");
  cmp->add_option("dirs", compare_dirs, "exported run directories")->required();
  cmp->add_option("--out", compare_out, "output directory")->required();

  std::string report_dir;
  std::optional<double> baseline_flag;
  auto* rep = app.add_subcommand("report", "summarize one exported run");
  rep->add_option("dir", report_dir, "exported run directory")->required();
  rep->add_option("--baseline", baseline_flag, "baseline reward threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, strategy_flag, seed_flag, jobs_flag, out_flag);
    if (cmp->parsed()) return cmd_compare(compare_dirs, compare_out);
    return cmd_report(report_dir, baseline_flag);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const SearchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSearchError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
