#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mbrl/env.hpp"
#include "mbrl/rng.hpp"

namespace mbrl {

struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Transition set stored column-batched (one row per transition) so training
// and metrics can run whole-matrix expressions. Immutable after
// construction; concurrent readers are safe.
struct TransitionDataset {
  EnvSpec spec;
  std::string regime;              // random | medium | medium_replay | medium_expert
  std::string behavior_meta_json;  // free-form provenance record (JSON text)

  Eigen::MatrixXd s;       // N x d_s
  Eigen::MatrixXd a;       // N x action_dim
  Eigen::VectorXd r;       // N
  Eigen::MatrixXd s_next;  // N x d_s
  std::vector<std::uint8_t> done;  // true terminations only, not timeouts

  std::size_t size() const { return done.size(); }
  Transition at(std::size_t i) const;

  // Episode ranges [begin, end) reconstructed from done flags and the
  // horizon (collection resets at terminal or after spec.horizon steps).
  // A trailing partial episode is included.
  std::vector<std::pair<std::size_t, std::size_t>> episode_ranges() const;
};

// Channel-wise standardization statistics over (s, a, delta = s_next - s, r),
// population std floored at 1e-8. Segment order in mean/std:
// [s (d_s), a (action_dim), delta (d_s), r (1)].
struct DatasetStats {
  int state_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  Eigen::VectorXd mean_s() const { return mean.segment(0, state_dim); }
  Eigen::VectorXd std_s() const { return std.segment(0, state_dim); }
  Eigen::VectorXd mean_a() const { return mean.segment(state_dim, action_dim); }
  Eigen::VectorXd std_a() const { return std.segment(state_dim, action_dim); }
  // target = (delta, r), length d_s + 1: the model's output channels.
  Eigen::VectorXd mean_target() const {
    return mean.segment(state_dim + action_dim, state_dim + 1);
  }
  Eigen::VectorXd std_target() const {
    return std.segment(state_dim + action_dim, state_dim + 1);
  }
};

using Policy =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& state, Rng& rng)>;

Policy uniform_random_policy(const EnvSpec& spec);

// Roll episodes with the policy, resetting at terminal states or after
// spec.horizon steps; returns exactly n_steps transitions. Fully seeded.
TransitionDataset collect(const Env& env, const Policy& policy,
                          std::size_t n_steps, std::uint64_t seed);

// Disjoint uniform-random split; |val| = round(N * val_fraction). Throws if
// either side would be empty. Relative transition order is preserved inside
// each side.
std::pair<TransitionDataset, TransitionDataset> split(
    const TransitionDataset& ds, double val_fraction, std::uint64_t seed);

DatasetStats compute_stats(const TransitionDataset& ds);

Eigen::VectorXd standardize(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std);
Eigen::VectorXd destandardize(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& std);

TransitionDataset concat(const TransitionDataset& a,
                         const TransitionDataset& b);

// Binary dataset file (documented layout, see README): magic, u32 header
// length, JSON header with format version and EnvSpec constants, then
// row-major little-endian f64 records (s, a, r, s_next) + 1-byte done.
void save_dataset(const TransitionDataset& ds, const std::string& path);
TransitionDataset load_dataset(const std::string& path);

// Lossless one-JSON-record-per-line export for inspection.
void export_jsonl(const TransitionDataset& ds, const std::string& path);

}  // namespace mbrl
