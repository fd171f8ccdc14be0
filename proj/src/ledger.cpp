#include "dptune/ledger.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dptune/errors.hpp"

namespace dptune {

namespace {

constexpr const char* kTrialsHeader =
    "trial_index,strategy,seed,sigma,eta,val_loss,val_accuracy,epsilon,reward,"
    "status,steps,sample_visits,wall_seconds";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("ledger: bad numeric field '" + s + "' in " + what);
  }
}

void write_trials_csv(const Ledger& ledger, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kTrialsHeader << "\n";
  for (const auto& r : ledger.records) {
    out << r.trial_index << ',' << r.strategy << ',' << r.seed << ','
        << format_double(r.hp.sigma) << ',' << format_double(r.hp.eta) << ','
        << format_double(r.val_loss) << ',' << format_double(r.val_accuracy)
        << ',' << format_double(r.epsilon) << ',' << format_double(r.reward)
        << ',' << (r.status == TrialStatus::Ok ? "ok" : "failed") << ','
        << r.cost.steps << ',' << r.cost.sample_visits << ','
        << format_double(r.cost.wall_seconds) << "\n";
  }
}

std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ledger file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTrialsHeader)
    throw DataError("ledger: unexpected trials.csv header in " + path.string());
  std::vector<TrialRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13)
      throw DataError("ledger: malformed trials.csv row in " + path.string());
    TrialRecord r;
    r.trial_index = static_cast<int>(parse_double(f[0], "trial_index"));
    r.strategy = f[1];
    r.seed = std::stoull(f[2]);
    r.hp = {parse_double(f[3], "sigma"), parse_double(f[4], "eta")};
    r.val_loss = parse_double(f[5], "val_loss");
    r.val_accuracy = parse_double(f[6], "val_accuracy");
    r.epsilon = parse_double(f[7], "epsilon");
    r.reward = parse_double(f[8], "reward");
    if (f[9] != "ok" && f[9] != "failed")
      throw DataError("ledger: unknown status '" + f[9] + "'");
    r.status = f[9] == "ok" ? TrialStatus::Ok : TrialStatus::Failed;
    r.cost.steps = std::stoll(f[10]);
    r.cost.sample_visits = std::stoull(f[11]);
    r.cost.wall_seconds = parse_double(f[12], "wall_seconds");
    records.push_back(std::move(r));
  }
  return records;
}

void write_visits_csv(const std::filesystem::path& path,
                      const VisitCounter& counter,
                      const std::vector<std::int64_t>& sample_ids) {
  auto out = open_out(path);
  out << "sample_id,count\n";
  for (std::size_t i = 0; i < counter.counts.size(); ++i) {
    const std::int64_t id =
        i < sample_ids.size() ? sample_ids[i] : static_cast<std::int64_t>(i);
    out << id << ',' << counter.counts[i] << "\n";
  }
}

VisitCounter read_visits_csv(const std::filesystem::path& path,
                             std::vector<std::int64_t>* ids_out) {
  VisitCounter counter;
  std::ifstream in(path, std::ios::binary);
  if (!in) return counter;  // visit files are optional on load
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw DataError("ledger: malformed visits row in " + path.string());
    if (ids_out != nullptr) ids_out->push_back(std::stoll(f[0]));
    counter.counts.push_back(std::stoull(f[1]));
  }
  return counter;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void finalize_ledger(Ledger& ledger) {
  const std::size_t n =
      ledger.visit_shards.empty() ? 0 : ledger.visit_shards.front().counts.size();
  ledger.merged_visits = VisitCounter(n);
  for (const auto& shard : ledger.visit_shards) ledger.merged_visits.merge(shard);
  ledger.visits_to_best = visits_before_best(ledger);
}

std::optional<std::size_t> best_record(std::span<const TrialRecord> records) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].status != TrialStatus::Ok) continue;
    if (!best || records[i].reward > records[*best].reward) best = i;
  }
  return best;
}

std::optional<BaselineCost> budget_to_baseline(const Ledger& ledger,
                                               double baseline) {
  BaselineCost cost;
  for (const auto& r : ledger.records) {
    ++cost.trials;
    cost.sample_visits += r.cost.sample_visits;
    cost.wall_seconds += r.cost.wall_seconds;
    if (r.status == TrialStatus::Ok && r.reward >= baseline) return cost;
  }
  return std::nullopt;
}

VisitCounter visits_before_best(const Ledger& ledger) {
  const auto best = best_record(ledger.records);
  if (!best || ledger.visit_shards.empty()) return ledger.visits_to_best;
  VisitCounter out(ledger.visit_shards.front().counts.size());
  for (std::size_t i = 0; i <= *best && i < ledger.visit_shards.size(); ++i)
    out.merge(ledger.visit_shards[i]);
  return out;
}

void export_ledger(const Ledger& ledger, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec && !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory: " + dir.string());

  write_trials_csv(ledger, dir / "trials.csv");
  write_visits_csv(dir / "visits.csv", ledger.visits_to_best, ledger.sample_ids);
  write_visits_csv(dir / "visits_total.csv", ledger.merged_visits,
                   ledger.sample_ids);

  const auto best = best_record(ledger.records);
  nlohmann::json best_json = nullptr;
  if (best) {
    const TrialRecord& b = ledger.records[*best];
    best_json = {{"trial_index", b.trial_index},
                 {"sigma", b.hp.sigma},
                 {"eta", b.hp.eta},
                 {"val_loss", b.val_loss},
                 {"val_accuracy", b.val_accuracy},
                 {"epsilon", b.epsilon},
                 {"reward", b.reward},
                 {"reward_percent_x100", b.reward * 100.0},
                 {"reward_percent_of_weight_sum",
                  ledger.weight_sum > 0.0 ? 100.0 * b.reward / ledger.weight_sum
                                          : 0.0}};
  }
  double wall_total = 0.0;
  for (const auto& r : ledger.records) wall_total += r.cost.wall_seconds;
  const nlohmann::json summary = {
      {"run_id", ledger.run_id},
      {"strategy", ledger.strategy},
      {"seed", ledger.seed},
      {"weight_sum", ledger.weight_sum},
      {"config", ledger.config},
      {"trials", ledger.records.size()},
      {"best", best_json},
      {"totals",
       {{"sample_visits", ledger.merged_visits.total()},
        {"visits_to_best", ledger.visits_to_best.total()},
        {"wall_seconds", wall_total}}},
      {"accountant_audit", ledger.accountant_audit}};
  open_out(dir / "summary.json") << summary.dump(2) << "\n";

  for (std::size_t k = 0; k < ledger.rl_heatmaps.size(); ++k) {
    auto out = open_out(dir / ("rl_heatmap_ep" + std::to_string(k) + ".tsv"));
    const MatXd& heat = ledger.rl_heatmaps[k];
    for (Eigen::Index i = 0; i < heat.rows(); ++i) {
      for (Eigen::Index j = 0; j < heat.cols(); ++j) {
        if (j > 0) out << '\t';
        out << format_double(heat(i, j));
      }
      out << "\n";
    }
  }
}

Ledger load_ledger(const std::filesystem::path& dir) {
  Ledger ledger;
  ledger.records = read_trials_csv(dir / "trials.csv");

  std::ifstream in(dir / "summary.json", std::ios::binary);
  if (!in) throw DataError("cannot open ledger file: " + (dir / "summary.json").string());
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ledger: bad summary.json: " + std::string(e.what()));
  }
  ledger.run_id = summary.value("run_id", "");
  ledger.strategy = summary.value("strategy", "");
  ledger.seed = summary.value("seed", std::uint64_t{0});
  ledger.weight_sum = summary.value("weight_sum", 1.0);
  if (summary.contains("config")) ledger.config = summary["config"];
  if (summary.contains("accountant_audit"))
    ledger.accountant_audit = summary["accountant_audit"];

  ledger.visits_to_best = read_visits_csv(dir / "visits.csv", &ledger.sample_ids);
  ledger.merged_visits = read_visits_csv(dir / "visits_total.csv", nullptr);
  return ledger;
}

ComparisonReport compare(std::span<const Ledger> ledgers) {
  const Ledger* grid = nullptr;
  for (const auto& l : ledgers)
    if (l.strategy == "grid") grid = &l;
  if (grid == nullptr) throw SearchError("compare: baseline unavailable");

  ComparisonReport report;
  report.baseline = baseline_reward(grid->records);
  for (const auto& l : ledgers) {
    ComparisonRow row;
    row.strategy = l.strategy;
    const auto best = best_record(l.records);
    if (!best) {
      row.failed = true;
      report.rows.push_back(std::move(row));
      continue;
    }
    const TrialRecord& b = l.records[*best];
    row.best_reward = b.reward;
    row.best_accuracy = b.val_accuracy;
    row.best_epsilon = b.epsilon;
    if (const auto cost = budget_to_baseline(l, report.baseline)) {
      row.trials_to_baseline = cost->trials;
      row.visits_to_baseline = cost->sample_visits;
      row.wall_to_baseline = cost->wall_seconds;
    }
    row.total_visits_to_best = visits_before_best(l).total();
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_comparison(const ComparisonReport& report,
                      const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path) {
  auto csv = open_out(csv_path);
  csv << "strategy,best_reward,best_accuracy,best_epsilon,trials_to_baseline,"
         "visits_to_baseline,wall_to_baseline,total_visits_to_best,status\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    if (row.failed) {
      csv << row.strategy << ",nan,nan,nan,unreached,unreached,unreached,"
          << row.total_visits_to_best << ",failed\n";
    } else {
      csv << row.strategy << ',' << format_double(row.best_reward) << ','
          << format_double(row.best_accuracy) << ','
          << format_double(row.best_epsilon) << ','
          << (row.trials_to_baseline ? std::to_string(*row.trials_to_baseline)
                                     : "unreached")
          << ','
          << (row.visits_to_baseline ? std::to_string(*row.visits_to_baseline)
                                     : "unreached")
          << ','
          << (row.wall_to_baseline ? format_double(*row.wall_to_baseline)
                                   : "unreached")
          << ',' << row.total_visits_to_best << ",ok\n";
    }
    rows.push_back({{"strategy", row.strategy},
                    {"failed", row.failed},
                    {"best_reward", row.best_reward},
                    {"best_accuracy", row.best_accuracy},
                    {"best_epsilon", row.best_epsilon},
                    {"trials_to_baseline",
                     row.trials_to_baseline ? nlohmann::json(*row.trials_to_baseline)
                                            : nlohmann::json(nullptr)},
                    {"visits_to_baseline",
                     row.visits_to_baseline ? nlohmann::json(*row.visits_to_baseline)
                                            : nlohmann::json(nullptr)},
                    {"wall_to_baseline",
                     row.wall_to_baseline ? nlohmann::json(*row.wall_to_baseline)
                                          : nlohmann::json(nullptr)},
                    {"total_visits_to_best", row.total_visits_to_best}});
  }
  const nlohmann::json doc = {{"baseline", report.baseline}, {"rows", rows}};
  open_out(json_path) << doc.dump(2) << "\n";
}

}  // namespace dptune
