#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>

#include "mbrl/rng.hpp"

namespace mbrl {

struct EnvSpec {
  std::string id;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  double gamma = 0.99;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  // Reference returns for normalized scores and the medium checkpoint rule,
  // measured once during development (see regimes).
  double random_ref = 0.0;
  double expert_ref = 0.0;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
};

// Deterministic pure-function environments: all state is caller-held, so
// any number of threads may step the same Env concurrently.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;

  // Draw an initial state from mu0.
  virtual Eigen::VectorXd reset(Rng& rng) const = 0;
  Eigen::VectorXd reset_seeded(std::uint64_t seed) const;

  // Deterministic transition; action is clipped to bounds internally.
  virtual StepResult step(const Eigen::VectorXd& state,
                          const Eigen::VectorXd& action) const = 0;

  // True termination oracle, a pure function of state. Agrees with the done
  // flag produced by step on the next state.
  virtual bool terminal(const Eigen::VectorXd& state) const = 0;

  Eigen::VectorXd clip_action(const Eigen::VectorXd& a) const;
};

// env_id in {"pendulum", "hopper_lite"}; throws std::invalid_argument
// otherwise.
std::unique_ptr<Env> make_env(const std::string& env_id);

// Spec constants for an env id without constructing the env.
EnvSpec env_spec(const std::string& env_id);

}  // namespace mbrl
