#pragma once

#include <cstdint>
#include <vector>

#include "mbrl/dataset.hpp"
#include "mbrl/sac.hpp"

namespace mbrl {

// Online SAC run used only to obtain behavior policies for the offline
// regimes. Thresholds are fractions of the env's reference-return range:
// threshold(f) = random_ref + f * (expert_ref - random_ref), evaluated on
// the moving average of the last avg_window completed training episodes.
struct OnlineSacConfig {
  SacConfig sac;
  long long max_steps = 60000;
  int warmup_steps = 1000;        // uniform-random actions, no updates
  double medium_fraction = 0.5;   // checkpoint the medium agent here
  double expert_fraction = 0.9;   // stop here (or at max_steps)
  int avg_window = 10;
  long long replay_capacity = 100000;
};

struct OnlineSacResult {
  SacAgent medium_agent;          // snapshot at the medium threshold
  SacAgent expert_agent;          // final agent
  TransitionDataset medium_replay;  // full env stream up to the checkpoint
  bool medium_reached = false;
  bool expert_reached = false;
  long long medium_step = -1;     // env steps consumed at the checkpoint
  long long total_steps = 0;
  long long updates_before_medium = 0;
  std::vector<double> episode_returns;
};

OnlineSacResult train_online_sac(const Env& env, const OnlineSacConfig& cfg,
                                 std::uint64_t seed);

// Stochastic data-collection policy of a frozen agent.
Policy sac_policy(const SacAgent& agent);

struct RegimeConfig {
  std::size_t n_random = 20000;
  std::size_t n_medium = 20000;
  std::size_t n_expert = 20000;   // medium_expert = medium ++ expert
  int meta_eval_episodes = 10;    // provenance-only online evaluations
  OnlineSacConfig online;
};

struct RegimeSuite {
  TransitionDataset random;
  TransitionDataset medium;
  TransitionDataset medium_replay;  // emergent size
  TransitionDataset medium_expert;
  OnlineSacResult online;           // the generating agents + provenance
};

// The four D4RL-style offline regimes on a toy env: random-policy steps,
// steps from a half-trained SAC agent, that run's own replay stream, and
// medium data concatenated with converged-agent data.
RegimeSuite make_regime_suite(const Env& env, const RegimeConfig& cfg,
                              std::uint64_t seed);

}  // namespace mbrl
