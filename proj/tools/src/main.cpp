#include <cstdio>
#include <exception>
#include <functional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mbrl/config.hpp"
#include "mbrl/nnet.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Offline model-based RL workbench"};
  app.require_subcommand(1);

  mbrl::cli::Options opt;
  std::function<int(const mbrl::cli::Options&)> run;

  auto add_common = [&opt](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "Run configuration (JSON)");
    cmd->add_option("--out", opt.out_dir, "Output directory");
    cmd->add_option("--seed", opt.seed, "Root seed (overrides the config)")
        ->each([&opt](const std::string&) { opt.has_seed = true; });
    cmd->add_option("--workers", opt.workers,
                    "Parallel jobs (overrides the config)");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "Generate the regime datasets");
  add_common(gen);
  gen->callback([&run]() { run = mbrl::cli::cmd_gen_data; });

  CLI::App* train =
      app.add_subcommand("train-model", "Train the model grid + reports");
  add_common(train);
  train->add_option("--data", opt.data_dir, "Directory with gen-data outputs")
      ->required();
  train->callback([&run]() { run = mbrl::cli::cmd_train_model; });

  CLI::App* eval =
      app.add_subcommand("eval-model", "Static metrics of a checkpoint");
  add_common(eval);
  eval->add_option("--data", opt.data_dir, "Directory with gen-data outputs")
      ->required();
  eval->add_option("--model", opt.model_dir, "Model checkpoint directory")
      ->required();
  eval->callback([&run]() { run = mbrl::cli::cmd_eval_model; });

  CLI::App* mopo = app.add_subcommand("run-mopo", "Offline MOPO-SAC runs");
  add_common(mopo);
  mopo->add_option("--data", opt.data_dir, "Directory with gen-data outputs")
      ->required();
  mopo->add_option("--model", opt.model_dir, "Model checkpoint directory")
      ->required();
  mopo->callback([&run]() { run = mbrl::cli::cmd_run_mopo; });

  CLI::App* corr =
      app.add_subcommand("correlate", "Static-dynamic correlation tables");
  add_common(corr);
  corr->add_option("--records", opt.record_paths,
                   "Experiment record JSON files");
  corr->callback([&run]() { run = mbrl::cli::cmd_correlate; });

  CLI::App* plots =
      app.add_subcommand("export-plots", "Plot-ready CSV from reports");
  add_common(plots);
  plots->add_option("--report", opt.report_path, "Metric report JSON");
  plots->add_option("--curve", opt.curve_path, "Training curve JSON");
  plots->callback([&run]() { run = mbrl::cli::cmd_export_plots; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(opt);
  } catch (const mbrl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mbrl::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
