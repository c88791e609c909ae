#pragma once

#include <cstdint>
#include <vector>

#include "mbrl/dataset.hpp"
#include "mbrl/pmdp.hpp"
#include "mbrl/sac.hpp"

namespace mbrl {

struct MopoConfig {
  double lambda = 1.0;
  Heuristic heuristic = Heuristic::kSingleSigma;
  int h = 5;
  long long updates = 100000;      // SAC batch budget B
  double rho_real = 0.05;          // real-data share of every SAC batch
  int eval_every = 5000;
  int eval_episodes = 10;
  int rollout_starts = 400;        // new rollouts every rollout_every updates
  int rollout_every = 250;
  long long buffer_capacity = 100000;
  SacConfig sac;
  std::uint64_t seed = 0;
};

struct EvalPoint {
  long long update = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct MopoResult {
  SacAgent agent;                // best-return checkpoint
  std::vector<EvalPoint> curve;
  double best_return = 0.0;      // max over the curve; NaN for an empty curve
  long long best_update = -1;
  RolloutStats rollouts;         // totals over all rollout generations
  double buffer_mean_reward = 0.0;
};

// Offline policy optimization in the pessimistic model MDP: alternate
// short-horizon model rollouts from dataset start states with SAC updates
// on batches that mix round(rho_real * batch_size) real transitions (raw
// rewards) into the penalized model data; evaluate on the true env every
// eval_every updates and return the best-return checkpoint. updates = 0
// returns the initial agent and an empty curve.
MopoResult mopo_train(const TransitionDataset& dataset,
                      const DynamicsModel& model, const Env& env,
                      const MopoConfig& cfg);

}  // namespace mbrl
