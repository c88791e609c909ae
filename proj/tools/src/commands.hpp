#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbrl/config.hpp"

namespace mbrl::cli {

// Shared command-line state; subcommands fill what they use.
struct Options {
  std::string config_path;
  std::string out_dir;
  std::string data_dir;
  std::string model_dir;
  std::string report_path;
  std::string curve_path;
  std::vector<std::string> record_paths;
  bool has_seed = false;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: from config
};

// Loads the config and applies the --seed/--out/--workers overrides.
RunConfig effective_config(const Options& opt);

int cmd_gen_data(const Options& opt);
int cmd_train_model(const Options& opt);
int cmd_eval_model(const Options& opt);
int cmd_run_mopo(const Options& opt);
int cmd_correlate(const Options& opt);
int cmd_export_plots(const Options& opt);

}  // namespace mbrl::cli
