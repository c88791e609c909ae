#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mbrl/env.hpp"
#include "mbrl/nnet.hpp"
#include "mbrl/rng.hpp"

namespace mbrl {

struct SacConfig {
  int hidden_units = 256;
  int hidden_layers = 2;
  int head_hidden = 64;
  Activation activation = Activation::kSwish;
  double lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 256;
  double init_log_alpha = 0.0;
  // target entropy defaults to -action_dim; override only for experiments
  bool has_target_entropy = false;
  double target_entropy = 0.0;
};

// Soft actor-critic over a squashed-Gaussian policy with twin Q nets,
// Polyak-averaged targets and auto-tuned entropy temperature. Gradients are
// pushed through the DenseNet backward pass with hand-derived upstream
// terms: for u = mu + sigma * eps and t = tanh(u),
//   d log pi / d mu = 2 t,
//   d log pi / d ls = -1 + 2 t (u - mu),
// and the Q path routes the per-sample input gradient of the smaller of the
// two Q nets through da/du = scale * (1 - t^2).
class SacAgent {
 public:
  SacAgent(const EnvSpec& env, SacConfig cfg, std::uint64_t seed);

  const EnvSpec& env_spec() const { return env_; }
  const SacConfig& config() const { return cfg_; }
  double alpha() const;

  // Deterministic policy: squashed mean action.
  Eigen::VectorXd act_mean(const Eigen::VectorXd& s) const;
  Eigen::MatrixXd act_mean_batch(const Eigen::MatrixXd& s) const;
  // Stochastic policy sample.
  Eigen::VectorXd act_sample(const Eigen::VectorXd& s, Rng& rng) const;
  Eigen::MatrixXd act_sample_batch(const Eigen::MatrixXd& s, Rng& rng) const;

  struct Losses {
    double q1 = 0.0;
    double q2 = 0.0;
    double policy = 0.0;
    double alpha = 0.0;      // temperature after the update
    double entropy = 0.0;    // -mean log pi of the fresh samples
  };

  // One gradient step on twin Q, the policy, and the temperature, then a
  // Polyak update of the target nets. done is 0/1 per row.
  Losses update(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                const Eigen::VectorXd& r, const Eigen::MatrixXd& s_next,
                const Eigen::VectorXd& done, Rng& rng);

  void save(const std::string& dir) const;
  static SacAgent load(const std::string& dir);

 private:
  SacAgent(const EnvSpec& env, SacConfig cfg, DenseNet pi, DenseNet q1,
           DenseNet q2, DenseNet tq1, DenseNet tq2, double log_alpha);

  struct Squash {
    Eigen::MatrixXd u, t, a;
    Eigen::VectorXd logp;
  };
  Squash squash_sample(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& ls,
                       Rng& rng) const;

  EnvSpec env_;
  SacConfig cfg_;
  Eigen::VectorXd center_, scale_;
  DenseNet pi_, q1_, q2_, tq1_, tq2_;
  double log_alpha_;
  AdamState opt_pi_, opt_q1_, opt_q2_;
  double alpha_m_ = 0.0, alpha_v_ = 0.0;  // Adam state of log_alpha
  long long alpha_step_ = 0;
};

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;  // sample std (ddof = 1), 0 for one episode
  std::vector<double> returns;
};

// Deterministic-policy (mean action) episodes on the true env, undiscounted
// return sums; episode e uses a seed derived from (seed, e).
EvalResult evaluate_online(const SacAgent& agent, const Env& env,
                           int n_episodes, std::uint64_t seed);

// 100 * (ret - random_ref) / (expert_ref - random_ref).
double normalized_score(double ret, double random_ref, double expert_ref);

}  // namespace mbrl
