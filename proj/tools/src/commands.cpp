#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mbrl/analysis.hpp"
#include "mbrl/io.hpp"
#include "mbrl/jobs.hpp"
#include "mbrl/report.hpp"

namespace mbrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dataset_path(const std::string& dir, const std::string& env_id,
                         const std::string& regime) {
  return dir + "/" + env_id + "_" + regime + ".ds";
}

void write_manifest(const std::string& out_dir, const json& manifest) {
  io::write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

json dataset_summary(const TransitionDataset& ds, const std::string& file) {
  return json{{"regime", ds.regime},
              {"file", file},
              {"n", ds.size()},
              {"behavior_meta", json::parse(ds.behavior_meta_json.empty()
                                                ? "{}"
                                                : ds.behavior_meta_json)}};
}

json history_json(const std::vector<TrainResult>& history) {
  json nets = json::array();
  for (const auto& h : history)
    nets.push_back({{"train_loss", h.train_loss},
                    {"val_loss", h.val_loss},
                    {"initial_val", h.initial_val},
                    {"best_val", h.best_val},
                    {"best_epoch", h.best_epoch}});
  return json{{"nets", std::move(nets)}};
}

std::string model_cell_id(const ModelConfig& mc) {
  std::ostringstream os;
  os << to_string(mc.kind) << "_lr" << mc.lr << "_nhu" << mc.n_hidden_units
     << "_ncl" << mc.n_hidden_layers;
  return os.str();
}

std::string agent_cell_id(int h, double lambda, Heuristic heuristic) {
  std::ostringstream os;
  os << "h" << h << "_lam" << lambda << "_" << to_string(heuristic);
  return os.str();
}

MetricReport evaluate_model(const DynamicsModel& model,
                            const TransitionDataset& full,
                            const TransitionDataset& val,
                            const RunConfig& cfg, const std::string& model_id,
                            std::uint64_t metric_seed) {
  MetricReport report =
      static_metrics(model, val, model_id,
                     cfg.env_id + "_" + cfg.model.regime, cfg.metrics.n_bins);
  const std::vector<Trace> traces = dataset_traces(
      full, cfg.metrics.min_trace_len_resolved(), cfg.metrics.max_traces);
  if (!traces.empty()) {
    LongHorizonConfig lh;
    lh.l_max = cfg.metrics.l_max;
    lh.n = cfg.metrics.n_population;
    lh.starts_per_trace = cfg.metrics.starts_per_trace;
    lh.seed = metric_seed;
    add_long_horizon(report, model, traces, lh);
  }
  return report;
}

}  // namespace

RunConfig effective_config(const Options& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(opt.config_path);
  if (opt.has_seed) cfg.seed = opt.seed;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.workers > 0) cfg.workers = opt.workers;
  return cfg;
}

int cmd_gen_data(const Options& opt) {
  const RunConfig cfg = effective_config(opt);
  const auto env = make_env(cfg.env_id);
  fs::create_directories(cfg.out_dir);

  RegimeSuite suite = make_regime_suite(*env, cfg.data, cfg.seed);

  json regimes = json::array();
  for (const TransitionDataset* ds :
       {&suite.random, &suite.medium, &suite.medium_replay,
        &suite.medium_expert}) {
    const std::string file = dataset_path(cfg.out_dir, cfg.env_id, ds->regime);
    save_dataset(*ds, file);
    regimes.push_back(dataset_summary(*ds, file));
  }
  suite.online.medium_agent.save(cfg.out_dir + "/agents/medium");
  suite.online.expert_agent.save(cfg.out_dir + "/agents/expert");

  json manifest;
  manifest["command"] = "gen-data";
  manifest["env"] = cfg.env_id;
  manifest["seed"] = cfg.seed;
  manifest["regimes"] = std::move(regimes);
  manifest["agents"] = {{"medium", cfg.out_dir + "/agents/medium"},
                        {"expert", cfg.out_dir + "/agents/expert"}};
  manifest["online"] = {{"medium_reached", suite.online.medium_reached},
                        {"expert_reached", suite.online.expert_reached},
                        {"medium_step", suite.online.medium_step},
                        {"total_steps", suite.online.total_steps},
                        {"episodes", suite.online.episode_returns.size()}};
  write_manifest(cfg.out_dir, manifest);
  return 0;
}

int cmd_train_model(const Options& opt) {
  const RunConfig cfg = effective_config(opt);
  if (opt.data_dir.empty()) throw ConfigError("--data is required");
  const TransitionDataset full =
      load_dataset(dataset_path(opt.data_dir, cfg.env_id, cfg.model.regime));
  const auto [train_set, val_set] =
      split(full, cfg.val_fraction, derive_seed(cfg.seed, "data.split"));

  const std::vector<ModelConfig> grid = model_grid(cfg.model);
  struct CellOutcome {
    std::string id;
    double agg_lr = 0.0;
    bool failed = false;
    std::string error;
  };
  std::vector<CellOutcome> outcomes(grid.size());

  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    jobs.push_back([&, i]() {
      const ModelConfig& mc = grid[i];
      const std::string id = model_cell_id(mc);
      const std::string cell_dir = cfg.out_dir + "/cells/" + id;
      fs::create_directories(cell_dir);
      outcomes[i].id = id;
      try {
        const std::uint64_t cell_seed = derive_seed(cfg.seed, "model.cell", i);
        TrainedModel trained = train_model(train_set, val_set, mc, cell_seed);
        const MetricReport report =
            evaluate_model(*trained.model, full, val_set, cfg, id,
                           derive_seed(cell_seed, "metrics.long"));
        save_model(*trained.model, cell_dir + "/model");
        save_report(report, cell_dir + "/report.json");
        io::write_text_file(cell_dir + "/history.json",
                            history_json(trained.history).dump(2) + "\n");
        outcomes[i].agg_lr = report.agg_lr;
      } catch (const NumericalError& e) {
        // A diverged cell is an outcome, not a crash of the whole grid.
        outcomes[i].failed = true;
        outcomes[i].error = e.what();
        io::write_text_file(cell_dir + "/error.txt",
                            std::string(e.what()) + "\n");
      }
    });
  }
  run_jobs(jobs, cfg.workers);

  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].failed) continue;
    if (best < 0 || outcomes[i].agg_lr > outcomes[best].agg_lr)
      best = static_cast<std::ptrdiff_t>(i);
  }
  if (best < 0) throw NumericalError("train-model: every grid cell diverged");

  json cells = json::array();
  for (const auto& oc : outcomes) {
    json c{{"id", oc.id}};
    if (oc.failed) c["error"] = oc.error;
    else c["aggregate_lr"] = oc.agg_lr;
    cells.push_back(std::move(c));
  }
  json manifest;
  manifest["command"] = "train-model";
  manifest["env"] = cfg.env_id;
  manifest["regime"] = cfg.model.regime;
  manifest["seed"] = cfg.seed;
  manifest["cells"] = std::move(cells);
  manifest["selected"] = outcomes[best].id;
  manifest["selection_rule"] = "argmax aggregate validation LR";
  write_manifest(cfg.out_dir, manifest);
  return 0;
}

int cmd_eval_model(const Options& opt) {
  const RunConfig cfg = effective_config(opt);
  if (opt.data_dir.empty()) throw ConfigError("--data is required");
  if (opt.model_dir.empty()) throw ConfigError("--model is required");
  const TransitionDataset full =
      load_dataset(dataset_path(opt.data_dir, cfg.env_id, cfg.model.regime));
  const auto [train_set, val_set] =
      split(full, cfg.val_fraction, derive_seed(cfg.seed, "data.split"));
  (void)train_set;

  const auto model = load_model(opt.model_dir);
  const std::string model_id = fs::path(opt.model_dir).filename().string();
  const MetricReport report =
      evaluate_model(*model, full, val_set, cfg, model_id,
                     derive_seed(cfg.seed, "metrics.long"));
  fs::create_directories(cfg.out_dir);
  save_report(report, cfg.out_dir + "/report.json");

  json manifest;
  manifest["command"] = "eval-model";
  manifest["env"] = cfg.env_id;
  manifest["regime"] = cfg.model.regime;
  manifest["seed"] = cfg.seed;
  manifest["model"] = opt.model_dir;
  manifest["report"] = cfg.out_dir + "/report.json";
  manifest["aggregate_lr"] = report.agg_lr;
  manifest["aggregate_ks"] = report.agg_ks;
  write_manifest(cfg.out_dir, manifest);
  return 0;
}

int cmd_run_mopo(const Options& opt) {
  const RunConfig cfg = effective_config(opt);
  if (opt.data_dir.empty()) throw ConfigError("--data is required");
  if (opt.model_dir.empty()) throw ConfigError("--model is required");
  const TransitionDataset dataset =
      load_dataset(dataset_path(opt.data_dir, cfg.env_id, cfg.model.regime));
  const auto model = load_model(opt.model_dir);
  const auto env = make_env(cfg.env_id);
  const EnvSpec& spec = env->spec();

  const std::vector<Heuristic> heuristics =
      heuristic_grid(cfg.agent, model->member_count());

  struct Cell {
    int h;
    double lambda;
    Heuristic heuristic;
    std::string id;
  };
  std::vector<Cell> cells;
  for (int h : cfg.agent.h_grid)
    for (double lambda : cfg.agent.lambda_grid)
      for (Heuristic heuristic : heuristics)
        cells.push_back({h, lambda, heuristic,
                         agent_cell_id(h, lambda, heuristic)});

  struct RunOutcome {
    double best_return = 0.0;
    double score = 0.0;
    long long best_update = -1;
    double truncation_rate = 0.0;
  };
  const std::size_t n_seeds = cfg.agent.seeds.size();
  std::vector<RunOutcome> runs(cells.size() * n_seeds);

  std::vector<std::function<void()>> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t si = 0; si < n_seeds; ++si) {
      jobs.push_back([&, c, si]() {
        const Cell& cell = cells[c];
        const std::uint64_t run_seed =
            derive_seed(cfg.seed, "mopo.run", cfg.agent.seeds[si]);
        MopoConfig mc;
        mc.lambda = cell.lambda;
        mc.heuristic = cell.heuristic;
        mc.h = cell.h;
        mc.updates = cfg.agent.updates;
        mc.rho_real = cfg.agent.rho_real;
        mc.eval_every = cfg.agent.eval_every;
        mc.eval_episodes = cfg.agent.eval_episodes;
        mc.rollout_starts = cfg.agent.rollout_starts;
        mc.rollout_every = cfg.agent.rollout_every;
        mc.buffer_capacity = cfg.agent.buffer_capacity;
        mc.sac = cfg.agent.sac;
        mc.seed = run_seed;
        const MopoResult res = mopo_train(dataset, *model, *env, mc);

        const std::string run_dir = cfg.out_dir + "/cells/" + cell.id +
                                    "/seed" +
                                    std::to_string(cfg.agent.seeds[si]);
        fs::create_directories(run_dir);
        res.agent.save(run_dir + "/agent");
        io::write_text_file(run_dir + "/curve.json", curve_to_json(res.curve));
        io::write_text_file(run_dir + "/curve.csv", curve_csv(res.curve));
        RunOutcome& out = runs[c * n_seeds + si];
        out.best_return = res.best_return;
        out.best_update = res.best_update;
        out.score = normalized_score(res.best_return, spec.random_ref,
                                     spec.expert_ref);
        out.truncation_rate = res.rollouts.truncation_rate();
        json rj;
        rj["best_return"] = res.best_return;
        rj["best_update"] = res.best_update;
        rj["normalized_score"] = out.score;
        rj["rollout_truncation_rate"] = out.truncation_rate;
        rj["buffer_mean_reward"] = res.buffer_mean_reward;
        io::write_text_file(run_dir + "/result.json", rj.dump(2) + "\n");
      });
    }
  }
  run_jobs(jobs, cfg.workers);

  json cell_rows = json::array();
  std::ptrdiff_t best_cell = -1;
  double best_mean = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> scores, returns;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      scores.push_back(runs[c * n_seeds + si].score);
      returns.push_back(runs[c * n_seeds + si].best_return);
    }
    json row;
    row["id"] = cells[c].id;
    row["h"] = cells[c].h;
    row["lambda"] = cells[c].lambda;
    row["heuristic"] = to_string(cells[c].heuristic);
    row["seeds"] = cfg.agent.seeds;
    row["normalized_scores"] = scores;
    row["best_returns"] = returns;
    double mean = 0.0;
    if (scores.size() >= 2) {
      const GaussianCi ci = gaussian_ci90(scores);
      row["score_mean"] = ci.mean;
      row["score_ci90_half_width"] = ci.half_width;
      mean = ci.mean;
    } else {
      row["score_mean"] = scores[0];
      mean = scores[0];
    }
    cell_rows.push_back(std::move(row));
    if (best_cell < 0 || mean > best_mean) {
      best_cell = static_cast<std::ptrdiff_t>(c);
      best_mean = mean;
    }
  }

  json manifest;
  manifest["command"] = "run-mopo";
  manifest["env"] = cfg.env_id;
  manifest["regime"] = cfg.model.regime;
  manifest["seed"] = cfg.seed;
  manifest["model"] = opt.model_dir;
  manifest["cells"] = std::move(cell_rows);
  manifest["best_cell"] = cells[best_cell].id;
  manifest["score_convention"] =
      "normalized best return, mean with two-sided 90% Gaussian CI over seeds";
  write_manifest(cfg.out_dir, manifest);
  return 0;
}

int cmd_correlate(const Options& opt) {
  if (opt.record_paths.empty())
    throw ConfigError("correlate: at least one --records file is required");
  std::vector<ExperimentRecord> records;
  for (const auto& path : opt.record_paths) {
    const json rec = json::parse(io::read_text_file(path));
    ExperimentRecord er;
    er.model_id = rec.at("model_id").get<std::string>();
    er.regime = rec.at("regime").get<std::string>();
    er.normalized_score = rec.at("normalized_score").get<double>();
    if (rec.contains("seeds"))
      er.seeds = rec.at("seeds").get<std::vector<std::uint64_t>>();
    std::string report_path = rec.at("report_path").get<std::string>();
    if (fs::path(report_path).is_relative())
      report_path = (fs::path(path).parent_path() / report_path).string();
    er.report = load_report(report_path);
    records.push_back(std::move(er));
  }
  const CorrelationTable table = correlate_study(records);

  const std::string out = opt.out_dir.empty() ? "." : opt.out_dir;
  fs::create_directories(out);
  io::write_text_file(out + "/correlations.csv", correlation_csv(table));
  io::write_text_file(out + "/correlations.json", correlation_json(table));
  json manifest;
  manifest["command"] = "correlate";
  manifest["records"] = opt.record_paths;
  manifest["outputs"] = {out + "/correlations.csv", out + "/correlations.json"};
  write_manifest(out, manifest);
  return 0;
}

int cmd_export_plots(const Options& opt) {
  if (opt.report_path.empty() && opt.curve_path.empty())
    throw ConfigError("export-plots: --report or --curve is required");
  const std::string out = opt.out_dir.empty() ? "." : opt.out_dir;
  fs::create_directories(out);
  json outputs = json::array();
  if (!opt.report_path.empty()) {
    const MetricReport report = load_report(opt.report_path);
    io::write_text_file(out + "/long_horizon.csv", long_horizon_csv(report));
    io::write_text_file(out + "/histograms.csv", histogram_csv(report));
    outputs.push_back(out + "/long_horizon.csv");
    outputs.push_back(out + "/histograms.csv");
  }
  if (!opt.curve_path.empty()) {
    const auto curve = curve_from_json(io::read_text_file(opt.curve_path));
    io::write_text_file(out + "/curve.csv", curve_csv(curve));
    outputs.push_back(out + "/curve.csv");
  }
  json manifest;
  manifest["command"] = "export-plots";
  manifest["outputs"] = std::move(outputs);
  write_manifest(out, manifest);
  return 0;
}

}  // namespace mbrl::cli
