#pragma once

#include <Eigen/Core>
#include <functional>

#include "mbrl/env.hpp"
#include "mbrl/models.hpp"
#include "mbrl/uncertainty.hpp"

namespace mbrl {

// Pessimistic MDP: the learned model with reward r~ = r^ - lambda * u(s, a)
// and the TRUE termination function of the underlying env. lambda = 0
// recovers the plain model MDP.
struct PMdp {
  const DynamicsModel* model = nullptr;
  const Env* env = nullptr;  // termination oracle only
  double lambda = 0.0;
  Heuristic heuristic = Heuristic::kSingleSigma;
  int h = 1;  // rollout horizon

  void validate() const;
};

// One batched penalized step: sample (s', r^) from the model, subtract
// lambda * u(s, a), terminate per the true termination function. Throws on
// non-finite model outputs.
void pmdp_step_batch(const PMdp& pmdp, const Eigen::MatrixXd& s,
                     const Eigen::MatrixXd& a, Rng& rng,
                     Eigen::MatrixXd& s_next, Eigen::VectorXd& r_tilde,
                     Eigen::VectorXd& done);

struct PmdpStep {
  Eigen::VectorXd s_next;
  double r_tilde = 0.0;
  bool done = false;
};
PmdpStep pmdp_step(const PMdp& pmdp, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& a, Rng& rng);

// Fixed-size ring buffer of model transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(long long capacity, int state_dim, int action_dim);

  long long size() const { return size_; }
  long long capacity() const { return capacity_; }
  int state_dim() const { return static_cast<int>(s_.cols()); }
  int action_dim() const { return static_cast<int>(a_.cols()); }

  // Appends rows, overwriting the oldest once full. Rejects non-finite
  // values.
  void add(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
           const Eigen::VectorXd& r, const Eigen::MatrixXd& s_next,
           const Eigen::VectorXd& done);

  // n rows drawn uniformly (with replacement) from the contents.
  void sample(int n, Rng& rng, Eigen::MatrixXd& s, Eigen::MatrixXd& a,
              Eigen::VectorXd& r, Eigen::MatrixXd& s_next,
              Eigen::VectorXd& done) const;

  double mean_reward() const;

 private:
  long long capacity_ = 0;
  long long head_ = 0;
  long long size_ = 0;
  Eigen::MatrixXd s_, a_, s_next_;
  Eigen::VectorXd r_, done_;
};

// Batched stochastic policy: states in, sampled actions out.
using RolloutPolicy =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, Rng&)>;

struct RolloutStats {
  long long n_starts = 0;
  long long n_transitions = 0;
  long long n_truncated = 0;  // rollouts ended by done before the h-th step
  double truncation_rate() const {
    return n_starts > 0 ? static_cast<double>(n_truncated) / n_starts : 0.0;
  }
};

// Draws n_starts start states uniformly from the dataset, rolls each at
// most h steps under the policy through the P-MDP (truncating at done) and
// appends every produced transition to the buffer. All appended rewards are
// penalized. Active rollouts are stepped together; rows retired by done
// drop out while the survivors keep their relative order.
RolloutStats generate_rollouts(const PMdp& pmdp, const RolloutPolicy& policy,
                               const Eigen::MatrixXd& dataset_states,
                               int n_starts, ReplayBuffer& buffer, Rng& rng);

}  // namespace mbrl
