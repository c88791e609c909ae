#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbrl/metrics.hpp"
#include "mbrl/models.hpp"
#include "mbrl/mopo.hpp"
#include "mbrl/regimes.hpp"

namespace mbrl {

// Config-file violations (unknown keys, wrong types, bad values). The CLI
// maps this to exit code 2 before any compute starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model stage: which kind to train on which regime dataset, over a small
// hyperparameter grid. Empty grid vectors mean the kind's documented
// default grid (see model_grid).
struct ModelGridConfig {
  ModelKind kind = ModelKind::kDarmdn;
  std::string regime = "medium";
  std::vector<double> lr_grid;
  std::vector<int> n_hidden_units_grid;
  std::vector<int> n_hidden_layers_grid;
  Activation activation = Activation::kTanh;
  double dropout = 0.0;
  int batch_size = 64;
  int epochs = 150;
  int patience = 20;
  double weight_decay = 0.0;
  int ensemble_members = 3;
};

struct MetricOptions {
  int n_bins = 20;
  int l_max = 20;
  int n_population = 100;
  int starts_per_trace = 50;
  int min_trace_len = 0;  // 0: l_max + 1
  int max_traces = 0;     // 0: no cap

  int min_trace_len_resolved() const {
    return min_trace_len > 0 ? min_trace_len : l_max + 1;
  }
};

// Agent stage: the (h, lambda, heuristic) grid and per-run MOPO settings.
// An empty heuristic grid resolves by model kind: ensembles get
// {ma, mpd, esd}, single models {sigma}.
struct AgentGridConfig {
  std::vector<int> h_grid = {1, 5, 50, 100};
  std::vector<double> lambda_grid = {0.1, 1.0, 5.0, 25.0};
  std::vector<std::string> heuristic_grid;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  long long updates = 100000;
  double rho_real = 0.05;
  int eval_every = 5000;
  int eval_episodes = 10;
  int rollout_starts = 400;
  int rollout_every = 250;
  long long buffer_capacity = 100000;
  SacConfig sac;
};

struct RunConfig {
  std::string env_id = "pendulum";
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;
  double val_fraction = 0.1;
  RegimeConfig data;
  ModelGridConfig model;
  MetricOptions metrics;
  AgentGridConfig agent;
};

// Parses and validates against the documented schema. Unknown keys anywhere
// raise ConfigError; so do type and range violations. Every key is optional
// except env.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// The full schema with all defaults filled in, as a JSON document (also the
// reference the README embeds).
std::string default_config_json(const std::string& env_id = "pendulum");

// Grid expansion with the documented per-kind defaults: darmdn lr in
// {1e-3, 3e-4} x units {50, 100, 200} x layers {1, 2}; dmdn (and ensemble
// members) lr in {1e-3, 3e-4} x units {100, 200, 500} x layers {2, 3, 4}.
std::vector<ModelConfig> model_grid(const ModelGridConfig& cfg);

// Heuristic grid resolution by member count (see AgentGridConfig).
std::vector<Heuristic> heuristic_grid(const AgentGridConfig& cfg,
                                      int member_count);

}  // namespace mbrl
