#include "dptune/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "dptune/errors.hpp"

namespace dptune {

namespace {

using nlohmann::json;

std::string joined(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key))
      throw ConfigError("config: unknown key '" + joined(path, key) + "'");
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

json require(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (v == nullptr)
    throw ConfigError("config: missing key '" + joined(path, key) + "'");
  return *v;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ConfigError("config: '" + where + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer())
    throw ConfigError("config: '" + where + "' must be an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string())
    throw ConfigError("config: '" + where + "' must be a string");
  return v.get<std::string>();
}

double number_or(const json& obj, const std::string& key, double def,
                 const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? def : as_number(*v, joined(path, key));
}

int int_or(const json& obj, const std::string& key, int def,
           const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? def : as_int(*v, joined(path, key));
}

std::string string_or(const json& obj, const std::string& key,
                      const std::string& def, const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? def : as_string(*v, joined(path, key));
}

RunConfig::DimSpec parse_dim(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, {"lo", "hi", "step", "scale"}, path);
  RunConfig::DimSpec dim;
  dim.lo = as_number(require(obj, "lo", path), joined(path, "lo"));
  dim.hi = as_number(require(obj, "hi", path), joined(path, "hi"));
  dim.step = as_number(require(obj, "step", path), joined(path, "step"));
  const std::string scale = string_or(obj, "scale", "linear", path);
  if (scale == "linear") {
    dim.scale = Scale::Linear;
  } else if (scale == "log") {
    dim.scale = Scale::Logarithmic;
  } else {
    throw ConfigError("config: '" + joined(path, "scale") +
                      "' must be 'linear' or 'log'");
  }
  if (!(dim.lo > 0.0) || !(dim.lo < dim.hi) || !(dim.step > 0.0))
    throw ConfigError("config: '" + path + "' requires 0 < lo < hi and step > 0");
  return dim;
}

RunConfig::DatasetSpec parse_dataset(const json& obj) {
  const std::string path = "dataset";
  reject_unknown_keys(
      obj, {"source", "n_train", "n_valid", "synthetic", "mnist", "cifar10"},
      path);
  RunConfig::DatasetSpec spec;
  spec.source = as_string(require(obj, "source", path), "dataset.source");
  if (spec.source != "synthetic" && spec.source != "mnist" &&
      spec.source != "cifar10")
    throw ConfigError(
        "config: 'dataset.source' must be synthetic, mnist, or cifar10");
  spec.n_train = as_int(require(obj, "n_train", path), "dataset.n_train");
  spec.n_valid = as_int(require(obj, "n_valid", path), "dataset.n_valid");
  if (spec.n_train < 1) throw ConfigError("config: 'dataset.n_train' must be >= 1");
  if (spec.n_valid < 1) throw ConfigError("config: 'dataset.n_valid' must be >= 1");

  if (spec.source == "synthetic") {
    if (const json* syn = find(obj, "synthetic")) {
      const std::string spath = "dataset.synthetic";
      reject_unknown_keys(*syn, {"n", "d", "classes", "separation"}, spath);
      spec.n = int_or(*syn, "n", spec.n, spath);
      spec.d = int_or(*syn, "d", spec.d, spath);
      spec.classes = int_or(*syn, "classes", spec.classes, spath);
      spec.separation = number_or(*syn, "separation", spec.separation, spath);
    }
    if (spec.classes < 2 || spec.n < spec.classes || spec.d < spec.classes)
      throw ConfigError(
          "config: 'dataset.synthetic' requires n >= classes >= 2 and d >= classes");
    if (!(spec.separation >= 0.0))
      throw ConfigError("config: 'dataset.synthetic.separation' must be >= 0");
    if (spec.n_train + spec.n_valid > spec.n)
      throw ConfigError(
          "config: 'dataset.n_train' + 'dataset.n_valid' exceeds synthetic n");
  } else if (spec.source == "mnist") {
    const json m = require(obj, "mnist", path);
    reject_unknown_keys(m, {"images", "labels"}, "dataset.mnist");
    spec.mnist_images =
        as_string(require(m, "images", "dataset.mnist"), "dataset.mnist.images");
    spec.mnist_labels =
        as_string(require(m, "labels", "dataset.mnist"), "dataset.mnist.labels");
  } else {
    const json c = require(obj, "cifar10", path);
    reject_unknown_keys(c, {"batches"}, "dataset.cifar10");
    const json batches = require(c, "batches", "dataset.cifar10");
    if (!batches.is_array() || batches.empty())
      throw ConfigError(
          "config: 'dataset.cifar10.batches' must be a non-empty array");
    for (const auto& b : batches)
      spec.cifar_batches.emplace_back(
          as_string(b, "dataset.cifar10.batches[]"));
  }
  return spec;
}

std::vector<int> parse_int_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("config: '" + where + "' must be an array");
  std::vector<int> out;
  for (const auto& e : v) {
    const int s = as_int(e, where + "[]");
    if (s < 1) throw ConfigError("config: '" + where + "' entries must be >= 1");
    out.push_back(s);
  }
  return out;
}

SurrogateFitConfig parse_surrogate_fit(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, {"epochs", "batch_size", "learning_rate"}, path);
  SurrogateFitConfig cfg;
  cfg.epochs = int_or(obj, "epochs", cfg.epochs, path);
  cfg.batch_size = int_or(obj, "batch_size", cfg.batch_size, path);
  cfg.learning_rate = number_or(obj, "learning_rate", cfg.learning_rate, path);
  if (cfg.epochs < 1) throw ConfigError("config: '" + path + ".epochs' must be >= 1");
  if (cfg.batch_size < 1)
    throw ConfigError("config: '" + path + ".batch_size' must be >= 1");
  if (!(cfg.learning_rate > 0.0))
    throw ConfigError("config: '" + path + ".learning_rate' must be > 0");
  return cfg;
}

void parse_strategy(const json& obj, RunConfig& cfg) {
  const std::string path = "strategy";
  cfg.strategy_name = as_string(require(obj, "name", path), "strategy.name");

  if (cfg.strategy_name == "grid") {
    reject_unknown_keys(obj, {"name", "per_dim"}, path);
    GridConfig grid;
    const json pd = require(obj, "per_dim", path);
    if (!pd.is_array() || pd.size() != 2)
      throw ConfigError("config: 'strategy.per_dim' must be an array of 2 counts");
    grid.per_dim = {as_int(pd[0], "strategy.per_dim[0]"),
                    as_int(pd[1], "strategy.per_dim[1]")};
    if (grid.per_dim[0] < 1 || grid.per_dim[1] < 1)
      throw ConfigError("config: 'strategy.per_dim' counts must be >= 1");
    cfg.strategy = grid;
  } else if (cfg.strategy_name == "evolutionary") {
    reject_unknown_keys(obj,
                        {"name", "population_size", "generations",
                         "elite_fraction", "crossover_rate", "mutation_strength"},
                        path);
    EvoConfig evo;
    evo.population_size = int_or(obj, "population_size", evo.population_size, path);
    evo.generations = int_or(obj, "generations", evo.generations, path);
    evo.elite_fraction = number_or(obj, "elite_fraction", evo.elite_fraction, path);
    evo.crossover_rate = number_or(obj, "crossover_rate", evo.crossover_rate, path);
    evo.mutation_strength =
        number_or(obj, "mutation_strength", evo.mutation_strength, path);
    if (evo.population_size < 2)
      throw ConfigError("config: 'strategy.population_size' must be >= 2");
    if (evo.generations < 1)
      throw ConfigError("config: 'strategy.generations' must be >= 1");
    if (!(evo.elite_fraction > 0.0 && evo.elite_fraction <= 1.0))
      throw ConfigError("config: 'strategy.elite_fraction' must be in (0, 1]");
    if (!(evo.crossover_rate >= 0.0 && evo.crossover_rate <= 1.0))
      throw ConfigError("config: 'strategy.crossover_rate' must be in [0, 1]");
    if (!(evo.mutation_strength >= 0.0 && evo.mutation_strength <= 1.0))
      throw ConfigError("config: 'strategy.mutation_strength' must be in [0, 1]");
    cfg.strategy = evo;
  } else if (cfg.strategy_name == "bayesian") {
    reject_unknown_keys(
        obj, {"name", "n_startup", "gamma", "n_candidates", "bandwidth_rule"},
        path);
    TpeConfig tpe;
    tpe.n_startup = int_or(obj, "n_startup", tpe.n_startup, path);
    tpe.gamma = number_or(obj, "gamma", tpe.gamma, path);
    tpe.n_candidates = int_or(obj, "n_candidates", tpe.n_candidates, path);
    tpe.bandwidth_rule = string_or(obj, "bandwidth_rule", tpe.bandwidth_rule, path);
    if (tpe.n_startup < 1)
      throw ConfigError("config: 'strategy.n_startup' must be >= 1");
    if (!(tpe.gamma > 0.0 && tpe.gamma < 1.0))
      throw ConfigError("config: 'strategy.gamma' must be in (0, 1)");
    if (tpe.n_candidates < 1)
      throw ConfigError("config: 'strategy.n_candidates' must be >= 1");
    if (tpe.bandwidth_rule != "gap_or_lattice")
      throw ConfigError("config: 'strategy.bandwidth_rule' is not a known rule");
    cfg.strategy = tpe;
  } else if (cfg.strategy_name == "rl") {
    reject_unknown_keys(obj,
                        {"name", "episodes", "trials_per_episode", "eps0",
                         "eps_decay", "top_fraction", "mutation_strength",
                         "surrogate_hidden", "surrogate_fit"},
                        path);
    RlConfig rl;
    rl.episodes = int_or(obj, "episodes", rl.episodes, path);
    rl.trials_per_episode =
        int_or(obj, "trials_per_episode", rl.trials_per_episode, path);
    rl.eps0 = number_or(obj, "eps0", rl.eps0, path);
    rl.eps_decay = number_or(obj, "eps_decay", rl.eps_decay, path);
    rl.top_fraction = number_or(obj, "top_fraction", rl.top_fraction, path);
    rl.mutation_strength =
        number_or(obj, "mutation_strength", rl.mutation_strength, path);
    if (const json* hidden = find(obj, "surrogate_hidden"))
      rl.surrogate_hidden = parse_int_list(*hidden, "strategy.surrogate_hidden");
    if (const json* fit = find(obj, "surrogate_fit"))
      rl.surrogate_fit = parse_surrogate_fit(*fit, "strategy.surrogate_fit");
    if (rl.episodes < 1)
      throw ConfigError("config: 'strategy.episodes' must be >= 1");
    if (rl.trials_per_episode < 1)
      throw ConfigError("config: 'strategy.trials_per_episode' must be >= 1");
    if (!(rl.eps0 >= 0.0 && rl.eps0 <= 1.0))
      throw ConfigError("config: 'strategy.eps0' must be in [0, 1]");
    if (!(rl.eps_decay > 0.0 && rl.eps_decay <= 1.0))
      throw ConfigError("config: 'strategy.eps_decay' must be in (0, 1]");
    if (!(rl.top_fraction > 0.0 && rl.top_fraction <= 1.0))
      throw ConfigError("config: 'strategy.top_fraction' must be in (0, 1]");
    if (!(rl.mutation_strength >= 0.0 && rl.mutation_strength <= 1.0))
      throw ConfigError("config: 'strategy.mutation_strength' must be in [0, 1]");
    cfg.strategy = rl;
  } else {
    throw ConfigError("config: 'strategy.name' must be one of grid, "
                      "evolutionary, bayesian, rl");
  }
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  reject_unknown_keys(doc,
                      {"dataset", "search_space", "train", "reward", "strategy",
                       "budget", "seed", "output_dir", "jobs"},
                      "");
  RunConfig cfg;
  cfg.dataset = parse_dataset(require(doc, "dataset", ""));

  const json space = require(doc, "search_space", "");
  reject_unknown_keys(space, {"sigma", "eta"}, "search_space");
  cfg.sigma_dim = parse_dim(require(space, "sigma", "search_space"),
                            "search_space.sigma");
  cfg.eta_dim = parse_dim(require(space, "eta", "search_space"),
                          "search_space.eta");
  // Defaults: sigma linear, eta logarithmic (eta typically spans decades).
  if (const json* sdim = find(space, "sigma"); sdim && !sdim->contains("scale"))
    cfg.sigma_dim.scale = Scale::Linear;
  if (const json* edim = find(space, "eta"); edim && !edim->contains("scale"))
    cfg.eta_dim.scale = Scale::Logarithmic;
  if (cfg.eta_dim.scale == Scale::Logarithmic && !(cfg.eta_dim.lo > 0.0))
    throw ConfigError("config: 'search_space.eta.lo' must be > 0 for log scale");

  if (const json* train = find(doc, "train")) {
    const std::string path = "train";
    reject_unknown_keys(
        *train,
        {"epochs", "batch_size", "clip_norm", "delta", "hidden", "activation"},
        path);
    cfg.epochs = int_or(*train, "epochs", cfg.epochs, path);
    cfg.batch_size = int_or(*train, "batch_size", cfg.batch_size, path);
    cfg.clip_norm = number_or(*train, "clip_norm", cfg.clip_norm, path);
    cfg.delta = number_or(*train, "delta", cfg.delta, path);
    if (const json* hidden = find(*train, "hidden"))
      cfg.hidden = parse_int_list(*hidden, "train.hidden");
    const std::string act = string_or(*train, "activation", "tanh", path);
    if (act == "tanh") {
      cfg.activation = Activation::Tanh;
    } else if (act == "sigmoid") {
      cfg.activation = Activation::Sigmoid;
    } else {
      throw ConfigError("config: 'train.activation' must be 'tanh' or 'sigmoid'");
    }
  }
  if (cfg.epochs < 1) throw ConfigError("config: 'train.epochs' must be >= 1");
  if (cfg.batch_size < 1 || cfg.batch_size > cfg.dataset.n_train)
    throw ConfigError("config: 'train.batch_size' must be in [1, n_train]");
  if (!(cfg.clip_norm > 0.0))
    throw ConfigError("config: 'train.clip_norm' must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ConfigError("config: 'train.delta' must be in (0, 1)");
  if (cfg.hidden.empty())
    cfg.hidden = {cfg.dataset.source == "cifar10" ? 128 : 64};

  if (const json* reward = find(doc, "reward")) {
    const std::string path = "reward";
    reject_unknown_keys(*reward, {"alpha_utility", "alpha_privacy"}, path);
    cfg.weights.alpha_utility =
        number_or(*reward, "alpha_utility", cfg.weights.alpha_utility, path);
    cfg.weights.alpha_privacy =
        number_or(*reward, "alpha_privacy", cfg.weights.alpha_privacy, path);
  }
  if (!(cfg.weights.alpha_utility >= 0.0 && cfg.weights.alpha_utility <= 1.0))
    throw ConfigError("config: 'reward.alpha_utility' must be in [0, 1]");
  if (!(cfg.weights.alpha_privacy >= 0.0 && cfg.weights.alpha_privacy <= 1.0))
    throw ConfigError("config: 'reward.alpha_privacy' must be in [0, 1]");

  parse_strategy(require(doc, "strategy", ""), cfg);

  const json budget = require(doc, "budget", "");
  reject_unknown_keys(budget,
                      {"max_trials", "max_sample_visits", "wall_limit_seconds"},
                      "budget");
  cfg.budget.max_trials =
      as_int(require(budget, "max_trials", "budget"), "budget.max_trials");
  if (cfg.budget.max_trials < 1)
    throw ConfigError("config: 'budget.max_trials' must be >= 1");
  if (const json* v = find(budget, "max_sample_visits")) {
    const double visits = as_number(*v, "budget.max_sample_visits");
    if (visits < 1) throw ConfigError("config: 'budget.max_sample_visits' must be >= 1");
    cfg.budget.max_sample_visits = static_cast<std::uint64_t>(visits);
  }
  if (const json* v = find(budget, "wall_limit_seconds")) {
    const double wall = as_number(*v, "budget.wall_limit_seconds");
    if (!(wall > 0.0))
      throw ConfigError("config: 'budget.wall_limit_seconds' must be > 0");
    cfg.budget.wall_limit_seconds = wall;
  }

  if (const json* seed = find(doc, "seed")) {
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0)
      throw ConfigError("config: 'seed' must be a non-negative integer");
    cfg.seed = seed->get<std::uint64_t>();
  }
  cfg.output_dir = string_or(doc, "output_dir", "", "");
  cfg.jobs = int_or(doc, "jobs", 1, "");
  if (cfg.jobs < 1) throw ConfigError("config: 'jobs' must be >= 1");

  // Grid counts must fit the lattice; build_space also re-validates bounds.
  const SearchSpace built = build_space(cfg);
  if (const GridConfig* grid = std::get_if<GridConfig>(&cfg.strategy)) {
    if (grid->per_dim[0] > built.sigma().lattice_size() ||
        grid->per_dim[1] > built.eta().lattice_size())
      throw ConfigError("config: 'strategy.per_dim' exceeds the lattice size");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }
  return parse_run_config(doc);
}

SearchSpace build_space(const RunConfig& cfg) {
  try {
    return SearchSpace(Dimension("sigma", cfg.sigma_dim.lo, cfg.sigma_dim.hi,
                                 cfg.sigma_dim.step, cfg.sigma_dim.scale),
                       Dimension("eta", cfg.eta_dim.lo, cfg.eta_dim.hi,
                                 cfg.eta_dim.step, cfg.eta_dim.scale));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: search_space: ") + e.what());
  }
}

nlohmann::json config_snapshot(const RunConfig& cfg) {
  nlohmann::json dataset = {{"source", cfg.dataset.source},
                            {"n_train", cfg.dataset.n_train},
                            {"n_valid", cfg.dataset.n_valid}};
  if (cfg.dataset.source == "synthetic") {
    dataset["synthetic"] = {{"n", cfg.dataset.n},
                            {"d", cfg.dataset.d},
                            {"classes", cfg.dataset.classes},
                            {"separation", cfg.dataset.separation}};
  } else if (cfg.dataset.source == "mnist") {
    dataset["mnist"] = {{"images", cfg.dataset.mnist_images.string()},
                        {"labels", cfg.dataset.mnist_labels.string()}};
  } else {
    nlohmann::json batches = nlohmann::json::array();
    for (const auto& b : cfg.dataset.cifar_batches) batches.push_back(b.string());
    dataset["cifar10"] = {{"batches", batches}};
  }

  const auto dim_json = [](const RunConfig::DimSpec& d) {
    return nlohmann::json{{"lo", d.lo},
                          {"hi", d.hi},
                          {"step", d.step},
                          {"scale", d.scale == Scale::Linear ? "linear" : "log"}};
  };

  nlohmann::json strategy = {{"name", cfg.strategy_name}};
  if (const GridConfig* grid = std::get_if<GridConfig>(&cfg.strategy)) {
    strategy["per_dim"] = {grid->per_dim[0], grid->per_dim[1]};
  } else if (const EvoConfig* evo = std::get_if<EvoConfig>(&cfg.strategy)) {
    strategy["population_size"] = evo->population_size;
    strategy["generations"] = evo->generations;
    strategy["elite_fraction"] = evo->elite_fraction;
    strategy["crossover_rate"] = evo->crossover_rate;
    strategy["mutation_strength"] = evo->mutation_strength;
  } else if (const TpeConfig* tpe = std::get_if<TpeConfig>(&cfg.strategy)) {
    strategy["n_startup"] = tpe->n_startup;
    strategy["gamma"] = tpe->gamma;
    strategy["n_candidates"] = tpe->n_candidates;
    strategy["bandwidth_rule"] = tpe->bandwidth_rule;
  } else if (const RlConfig* rl = std::get_if<RlConfig>(&cfg.strategy)) {
    strategy["episodes"] = rl->episodes;
    strategy["trials_per_episode"] = rl->trials_per_episode;
    strategy["eps0"] = rl->eps0;
    strategy["eps_decay"] = rl->eps_decay;
    strategy["top_fraction"] = rl->top_fraction;
    strategy["mutation_strength"] = rl->mutation_strength;
    strategy["surrogate_hidden"] = rl->surrogate_hidden;
    strategy["surrogate_fit"] = {{"epochs", rl->surrogate_fit.epochs},
                                 {"batch_size", rl->surrogate_fit.batch_size},
                                 {"learning_rate", rl->surrogate_fit.learning_rate}};
  }

  nlohmann::json budget = {{"max_trials", cfg.budget.max_trials}};
  if (cfg.budget.max_sample_visits)
    budget["max_sample_visits"] = *cfg.budget.max_sample_visits;
  if (cfg.budget.wall_limit_seconds)
    budget["wall_limit_seconds"] = *cfg.budget.wall_limit_seconds;

  return {{"dataset", dataset},
          {"search_space",
           {{"sigma", dim_json(cfg.sigma_dim)}, {"eta", dim_json(cfg.eta_dim)}}},
          {"train",
           {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"clip_norm", cfg.clip_norm},
            {"delta", cfg.delta},
            {"hidden", cfg.hidden},
            {"activation",
             cfg.activation == Activation::Tanh ? "tanh" : "sigmoid"}}},
          {"reward",
           {{"alpha_utility", cfg.weights.alpha_utility},
            {"alpha_privacy", cfg.weights.alpha_privacy}}},
          {"strategy", strategy},
          {"budget", budget},
          {"seed", cfg.seed},
          {"jobs", cfg.jobs}};
}

}  // namespace dptune
