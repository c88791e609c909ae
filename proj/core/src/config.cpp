#include "mbrl/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key \"" + key + "\"");
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& where,
         T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void require_positive(double v, const std::string& where) {
  if (!(v > 0)) throw ConfigError(where + ": must be positive");
}

void require_fraction(double v, const std::string& where) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(where + ": must be in (0, 1)");
}

SacConfig parse_sac(const json& obj, const std::string& where,
                    const SacConfig& base) {
  check_keys(obj, where,
             {"hidden_units", "hidden_layers", "head_hidden", "activation",
              "lr", "gamma", "tau", "batch_size", "init_log_alpha",
              "target_entropy"});
  SacConfig cfg = base;
  cfg.hidden_units = get_or(obj, "hidden_units", where, cfg.hidden_units);
  cfg.hidden_layers = get_or(obj, "hidden_layers", where, cfg.hidden_layers);
  cfg.head_hidden = get_or(obj, "head_hidden", where, cfg.head_hidden);
  if (obj.contains("activation")) {
    try {
      cfg.activation = activation_from_string(obj.at("activation").get<std::string>());
    } catch (const std::exception&) {
      throw ConfigError(where + ".activation: expected \"tanh\" or \"swish\"");
    }
  }
  cfg.lr = get_or(obj, "lr", where, cfg.lr);
  cfg.gamma = get_or(obj, "gamma", where, cfg.gamma);
  cfg.tau = get_or(obj, "tau", where, cfg.tau);
  cfg.batch_size = get_or(obj, "batch_size", where, cfg.batch_size);
  cfg.init_log_alpha = get_or(obj, "init_log_alpha", where, cfg.init_log_alpha);
  if (obj.contains("target_entropy")) {
    cfg.target_entropy = obj.at("target_entropy").get<double>();
    cfg.has_target_entropy = true;
  }
  require_positive(cfg.hidden_units, where + ".hidden_units");
  require_positive(cfg.hidden_layers, where + ".hidden_layers");
  require_positive(cfg.lr, where + ".lr");
  require_positive(cfg.batch_size, where + ".batch_size");
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
    throw ConfigError(where + ".gamma: must be in [0, 1]");
  require_fraction(cfg.tau, where + ".tau");
  return cfg;
}

json sac_to_json(const SacConfig& cfg) {
  json out;
  out["hidden_units"] = cfg.hidden_units;
  out["hidden_layers"] = cfg.hidden_layers;
  out["head_hidden"] = cfg.head_hidden;
  out["activation"] = to_string(cfg.activation);
  out["lr"] = cfg.lr;
  out["gamma"] = cfg.gamma;
  out["tau"] = cfg.tau;
  out["batch_size"] = cfg.batch_size;
  out["init_log_alpha"] = cfg.init_log_alpha;
  return out;
}

OnlineSacConfig parse_online(const json& obj, const std::string& where,
                             const OnlineSacConfig& base) {
  check_keys(obj, where,
             {"sac", "max_steps", "warmup_steps", "medium_fraction",
              "expert_fraction", "avg_window", "replay_capacity"});
  OnlineSacConfig cfg = base;
  if (obj.contains("sac")) cfg.sac = parse_sac(obj.at("sac"), where + ".sac", cfg.sac);
  cfg.max_steps = get_or<long long>(obj, "max_steps", where, cfg.max_steps);
  cfg.warmup_steps = get_or(obj, "warmup_steps", where, cfg.warmup_steps);
  cfg.medium_fraction = get_or(obj, "medium_fraction", where, cfg.medium_fraction);
  cfg.expert_fraction = get_or(obj, "expert_fraction", where, cfg.expert_fraction);
  cfg.avg_window = get_or(obj, "avg_window", where, cfg.avg_window);
  cfg.replay_capacity =
      get_or<long long>(obj, "replay_capacity", where, cfg.replay_capacity);
  require_positive(static_cast<double>(cfg.max_steps), where + ".max_steps");
  require_fraction(cfg.medium_fraction, where + ".medium_fraction");
  if (!(cfg.expert_fraction > cfg.medium_fraction))
    throw ConfigError(where + ".expert_fraction: must exceed medium_fraction");
  require_positive(cfg.avg_window, where + ".avg_window");
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"env", "seed", "out_dir", "workers", "val_fraction", "data",
              "model", "metrics", "agent"});
  if (!root.contains("env")) throw ConfigError("config.env: required");

  RunConfig cfg;
  try {
    cfg.env_id = root.at("env").get<std::string>();
  } catch (const json::exception&) {
    throw ConfigError("config.env: expected a string");
  }
  if (cfg.env_id != "pendulum" && cfg.env_id != "hopper_lite")
    throw ConfigError("config.env: unknown env \"" + cfg.env_id + "\"");
  cfg.seed = get_or<std::uint64_t>(root, "seed", "config", cfg.seed);
  cfg.out_dir = get_or<std::string>(root, "out_dir", "config", cfg.out_dir);
  cfg.workers = get_or(root, "workers", "config", cfg.workers);
  require_positive(cfg.workers, "config.workers");
  cfg.val_fraction = get_or(root, "val_fraction", "config", cfg.val_fraction);
  require_fraction(cfg.val_fraction, "config.val_fraction");

  if (root.contains("data")) {
    const json& data = root.at("data");
    check_keys(data, "config.data",
               {"n_random", "n_medium", "n_expert", "meta_eval_episodes",
                "online"});
    cfg.data.n_random =
        get_or<std::size_t>(data, "n_random", "config.data", cfg.data.n_random);
    cfg.data.n_medium =
        get_or<std::size_t>(data, "n_medium", "config.data", cfg.data.n_medium);
    cfg.data.n_expert =
        get_or<std::size_t>(data, "n_expert", "config.data", cfg.data.n_expert);
    cfg.data.meta_eval_episodes = get_or(data, "meta_eval_episodes",
                                         "config.data",
                                         cfg.data.meta_eval_episodes);
    if (cfg.data.n_random < 1 || cfg.data.n_medium < 1 || cfg.data.n_expert < 1)
      throw ConfigError("config.data: regime sizes must be >= 1");
    if (data.contains("online"))
      cfg.data.online =
          parse_online(data.at("online"), "config.data.online", cfg.data.online);
  }

  if (root.contains("model")) {
    const json& model = root.at("model");
    check_keys(model, "config.model",
               {"kind", "regime", "lr", "n_hidden_units", "n_hidden_layers",
                "activation", "dropout", "batch_size", "epochs", "patience",
                "weight_decay", "ensemble_members"});
    if (model.contains("kind")) {
      try {
        cfg.model.kind =
            model_kind_from_string(model.at("kind").get<std::string>());
      } catch (const std::exception&) {
        throw ConfigError(
            "config.model.kind: expected \"dmdn\", \"darmdn\" or \"ensemble\"");
      }
    }
    cfg.model.regime =
        get_or<std::string>(model, "regime", "config.model", cfg.model.regime);
    const std::set<std::string> regimes = {"random", "medium", "medium_replay",
                                           "medium_expert"};
    if (!regimes.count(cfg.model.regime))
      throw ConfigError("config.model.regime: unknown regime \"" +
                        cfg.model.regime + "\"");
    cfg.model.lr_grid = get_or<std::vector<double>>(model, "lr", "config.model",
                                                    cfg.model.lr_grid);
    cfg.model.n_hidden_units_grid = get_or<std::vector<int>>(
        model, "n_hidden_units", "config.model", cfg.model.n_hidden_units_grid);
    cfg.model.n_hidden_layers_grid = get_or<std::vector<int>>(
        model, "n_hidden_layers", "config.model",
        cfg.model.n_hidden_layers_grid);
    if (model.contains("activation")) {
      try {
        cfg.model.activation =
            activation_from_string(model.at("activation").get<std::string>());
      } catch (const std::exception&) {
        throw ConfigError(
            "config.model.activation: expected \"tanh\" or \"swish\"");
      }
    }
    cfg.model.dropout = get_or(model, "dropout", "config.model", cfg.model.dropout);
    if (cfg.model.dropout < 0.0 || cfg.model.dropout >= 1.0)
      throw ConfigError("config.model.dropout: must be in [0, 1)");
    cfg.model.batch_size =
        get_or(model, "batch_size", "config.model", cfg.model.batch_size);
    cfg.model.epochs = get_or(model, "epochs", "config.model", cfg.model.epochs);
    cfg.model.patience =
        get_or(model, "patience", "config.model", cfg.model.patience);
    cfg.model.weight_decay =
        get_or(model, "weight_decay", "config.model", cfg.model.weight_decay);
    cfg.model.ensemble_members = get_or(model, "ensemble_members",
                                        "config.model",
                                        cfg.model.ensemble_members);
    require_positive(cfg.model.batch_size, "config.model.batch_size");
    require_positive(cfg.model.epochs, "config.model.epochs");
    require_positive(cfg.model.patience, "config.model.patience");
    if (cfg.model.ensemble_members < 2)
      throw ConfigError("config.model.ensemble_members: must be >= 2");
  }

  if (root.contains("metrics")) {
    const json& m = root.at("metrics");
    check_keys(m, "config.metrics",
               {"n_bins", "l_max", "n_population", "starts_per_trace",
                "min_trace_len", "max_traces"});
    cfg.metrics.n_bins = get_or(m, "n_bins", "config.metrics", cfg.metrics.n_bins);
    cfg.metrics.l_max = get_or(m, "l_max", "config.metrics", cfg.metrics.l_max);
    cfg.metrics.n_population =
        get_or(m, "n_population", "config.metrics", cfg.metrics.n_population);
    cfg.metrics.starts_per_trace = get_or(m, "starts_per_trace",
                                          "config.metrics",
                                          cfg.metrics.starts_per_trace);
    cfg.metrics.min_trace_len =
        get_or(m, "min_trace_len", "config.metrics", cfg.metrics.min_trace_len);
    cfg.metrics.max_traces =
        get_or(m, "max_traces", "config.metrics", cfg.metrics.max_traces);
    require_positive(cfg.metrics.n_bins, "config.metrics.n_bins");
    require_positive(cfg.metrics.l_max, "config.metrics.l_max");
    require_positive(cfg.metrics.n_population, "config.metrics.n_population");
    require_positive(cfg.metrics.starts_per_trace,
                     "config.metrics.starts_per_trace");
  }

  if (root.contains("agent")) {
    const json& agent = root.at("agent");
    check_keys(agent, "config.agent",
               {"h", "lambda", "heuristic", "seeds", "updates", "rho_real",
                "eval_every", "eval_episodes", "rollout_starts",
                "rollout_every", "buffer_capacity", "sac"});
    cfg.agent.h_grid =
        get_or<std::vector<int>>(agent, "h", "config.agent", cfg.agent.h_grid);
    cfg.agent.lambda_grid = get_or<std::vector<double>>(
        agent, "lambda", "config.agent", cfg.agent.lambda_grid);
    cfg.agent.heuristic_grid = get_or<std::vector<std::string>>(
        agent, "heuristic", "config.agent", cfg.agent.heuristic_grid);
    for (const auto& h : cfg.agent.heuristic_grid) {
      try {
        heuristic_from_string(h);
      } catch (const std::exception&) {
        throw ConfigError("config.agent.heuristic: unknown heuristic \"" + h +
                          "\"");
      }
    }
    cfg.agent.seeds = get_or<std::vector<std::uint64_t>>(
        agent, "seeds", "config.agent", cfg.agent.seeds);
    if (cfg.agent.seeds.empty())
      throw ConfigError("config.agent.seeds: must be non-empty");
    cfg.agent.updates =
        get_or<long long>(agent, "updates", "config.agent", cfg.agent.updates);
    cfg.agent.rho_real =
        get_or(agent, "rho_real", "config.agent", cfg.agent.rho_real);
    if (cfg.agent.rho_real < 0.0 || cfg.agent.rho_real > 1.0)
      throw ConfigError("config.agent.rho_real: must be in [0, 1]");
    cfg.agent.eval_every =
        get_or(agent, "eval_every", "config.agent", cfg.agent.eval_every);
    cfg.agent.eval_episodes =
        get_or(agent, "eval_episodes", "config.agent", cfg.agent.eval_episodes);
    cfg.agent.rollout_starts = get_or(agent, "rollout_starts", "config.agent",
                                      cfg.agent.rollout_starts);
    cfg.agent.rollout_every = get_or(agent, "rollout_every", "config.agent",
                                     cfg.agent.rollout_every);
    cfg.agent.buffer_capacity = get_or<long long>(
        agent, "buffer_capacity", "config.agent", cfg.agent.buffer_capacity);
    if (agent.contains("sac"))
      cfg.agent.sac =
          parse_sac(agent.at("sac"), "config.agent.sac", cfg.agent.sac);
    for (int h : cfg.agent.h_grid)
      if (h < 1) throw ConfigError("config.agent.h: entries must be >= 1");
    for (double l : cfg.agent.lambda_grid)
      if (l < 0.0) throw ConfigError("config.agent.lambda: entries must be >= 0");
    require_positive(cfg.agent.eval_every, "config.agent.eval_every");
    require_positive(cfg.agent.eval_episodes, "config.agent.eval_episodes");
    require_positive(cfg.agent.rollout_starts, "config.agent.rollout_starts");
    require_positive(cfg.agent.rollout_every, "config.agent.rollout_every");
    require_positive(static_cast<double>(cfg.agent.buffer_capacity),
                     "config.agent.buffer_capacity");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(io::read_text_file(path));
}

std::string default_config_json(const std::string& env_id) {
  RunConfig d;
  json root;
  root["env"] = env_id;
  root["seed"] = d.seed;
  root["out_dir"] = d.out_dir;
  root["workers"] = d.workers;
  root["val_fraction"] = d.val_fraction;
  root["data"] = {
      {"n_random", d.data.n_random},
      {"n_medium", d.data.n_medium},
      {"n_expert", d.data.n_expert},
      {"meta_eval_episodes", d.data.meta_eval_episodes},
      {"online",
       {{"sac", sac_to_json(d.data.online.sac)},
        {"max_steps", d.data.online.max_steps},
        {"warmup_steps", d.data.online.warmup_steps},
        {"medium_fraction", d.data.online.medium_fraction},
        {"expert_fraction", d.data.online.expert_fraction},
        {"avg_window", d.data.online.avg_window},
        {"replay_capacity", d.data.online.replay_capacity}}}};
  root["model"] = {{"kind", to_string(d.model.kind)},
                   {"regime", d.model.regime},
                   {"lr", json::array()},
                   {"n_hidden_units", json::array()},
                   {"n_hidden_layers", json::array()},
                   {"activation", to_string(d.model.activation)},
                   {"dropout", d.model.dropout},
                   {"batch_size", d.model.batch_size},
                   {"epochs", d.model.epochs},
                   {"patience", d.model.patience},
                   {"weight_decay", d.model.weight_decay},
                   {"ensemble_members", d.model.ensemble_members}};
  root["metrics"] = {{"n_bins", d.metrics.n_bins},
                     {"l_max", d.metrics.l_max},
                     {"n_population", d.metrics.n_population},
                     {"starts_per_trace", d.metrics.starts_per_trace},
                     {"min_trace_len", d.metrics.min_trace_len},
                     {"max_traces", d.metrics.max_traces}};
  root["agent"] = {{"h", d.agent.h_grid},
                   {"lambda", d.agent.lambda_grid},
                   {"heuristic", d.agent.heuristic_grid},
                   {"seeds", d.agent.seeds},
                   {"updates", d.agent.updates},
                   {"rho_real", d.agent.rho_real},
                   {"eval_every", d.agent.eval_every},
                   {"eval_episodes", d.agent.eval_episodes},
                   {"rollout_starts", d.agent.rollout_starts},
                   {"rollout_every", d.agent.rollout_every},
                   {"buffer_capacity", d.agent.buffer_capacity},
                   {"sac", sac_to_json(d.agent.sac)}};
  return root.dump(2) + "\n";
}

std::vector<ModelConfig> model_grid(const ModelGridConfig& cfg) {
  const bool dmdn_shaped = cfg.kind != ModelKind::kDarmdn;
  std::vector<double> lrs = cfg.lr_grid;
  if (lrs.empty()) lrs = {1e-3, 3e-4};
  std::vector<int> units = cfg.n_hidden_units_grid;
  if (units.empty()) units = dmdn_shaped ? std::vector<int>{100, 200, 500}
                                         : std::vector<int>{50, 100, 200};
  std::vector<int> layers = cfg.n_hidden_layers_grid;
  if (layers.empty()) layers = dmdn_shaped ? std::vector<int>{2, 3, 4}
                                           : std::vector<int>{1, 2};

  std::vector<ModelConfig> grid;
  for (double lr : lrs)
    for (int nhu : units)
      for (int ncl : layers) {
        ModelConfig mc;
        mc.kind = cfg.kind;
        mc.lr = lr;
        mc.n_hidden_units = nhu;
        mc.n_hidden_layers = ncl;
        mc.activation = cfg.activation;
        mc.dropout = cfg.dropout;
        mc.batch_size = cfg.batch_size;
        mc.epochs = cfg.epochs;
        mc.patience = cfg.patience;
        mc.weight_decay = cfg.weight_decay;
        mc.ensemble_members = cfg.ensemble_members;
        grid.push_back(mc);
      }
  return grid;
}

std::vector<Heuristic> heuristic_grid(const AgentGridConfig& cfg,
                                      int member_count) {
  std::vector<Heuristic> out;
  if (cfg.heuristic_grid.empty()) {
    if (member_count >= 2)
      out = {Heuristic::kMa, Heuristic::kMpd, Heuristic::kEsd};
    else
      out = {Heuristic::kSingleSigma};
    return out;
  }
  for (const auto& name : cfg.heuristic_grid)
    out.push_back(heuristic_from_string(name));
  return out;
}

}  // namespace mbrl
