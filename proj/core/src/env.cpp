#include "mbrl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace mbrl {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Reference returns for normalized scores, each measured as the mean over
// 100 seeded episodes (random = uniform-random actions; expert = an online
// SAC run trained to convergence at the default agent settings). Stored in
// the EnvSpec so downstream consumers read them from dataset headers
// instead of hard-coding.
constexpr double kPendulumRandomRef = -900.918725;
constexpr double kPendulumExpertRef = -2.501857;
constexpr double kHopperRandomRef = 8.234837;
constexpr double kHopperExpertRef = 1548.673807;

double wrap_angle(double x) {
  // Map to [-pi, pi).
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y < 0) y += 2.0 * kPi;
  return y - kPi;
}

// Classic torque-limited pendulum with the state exposed as
// (cos th, sin th, thdot) so the predicted dimensions are functionally
// coupled. Explicit Euler, dt = 0.05, g = 10, m = l = 1:
//   thddot = 15 sin th + 3 u
//   thdot' = clip(thdot + dt thddot, +-8),  th' = th + dt thdot'
// Reward is charged on the pre-step state: -(wrap(th)^2 + 0.1 thdot^2
// + 0.001 u^2). Episodes never terminate; the horizon lives in the
// collector. mu0: th, thdot ~ U(-0.3, 0.3) around the upright rest point.
class PendulumEnv final : public Env {
 public:
  PendulumEnv() {
    spec_.id = "pendulum";
    spec_.state_dim = 3;
    spec_.action_dim = 1;
    spec_.horizon = 200;
    spec_.gamma = 0.99;
    spec_.action_low = Eigen::VectorXd::Constant(1, -2.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 2.0);
    spec_.random_ref = kPendulumRandomRef;
    spec_.expert_ref = kPendulumExpertRef;
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(Rng& rng) const override {
    const double th = rng.uniform(-0.3, 0.3);
    const double thdot = rng.uniform(-0.3, 0.3);
    Eigen::VectorXd s(3);
    s << std::cos(th), std::sin(th), thdot;
    return s;
  }

  StepResult step(const Eigen::VectorXd& state,
                  const Eigen::VectorXd& action) const override {
    check_finite(state, action);
    const double u = clip_action(action)(0);
    const double th = std::atan2(state(1), state(0));
    const double thdot = state(2);

    const double cost =
        wrap_angle(th) * wrap_angle(th) + 0.1 * thdot * thdot + 0.001 * u * u;

    const double thddot = 15.0 * std::sin(th) + 3.0 * u;
    double new_thdot = thdot + kDt * thddot;
    new_thdot = std::min(std::max(new_thdot, -kMaxSpeed), kMaxSpeed);
    const double new_th = th + kDt * new_thdot;

    StepResult out;
    out.next_state.resize(3);
    out.next_state << std::cos(new_th), std::sin(new_th), new_thdot;
    out.reward = -cost;
    out.done = false;
    return out;
  }

  bool terminal(const Eigen::VectorXd&) const override { return false; }

 private:
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;

  static void check_finite(const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    if (!s.allFinite() || !a.allFinite())
      throw std::invalid_argument("pendulum: non-finite state or action");
  }

  EnvSpec spec_;
};

// One-dimensional hopper surrogate. State (z, xdot, zdot), scalar thrust
// a in [-1, 1], dt = 0.05, explicit Euler:
//   zdot' = zdot + dt (15 a - 10)
//   z'    = z + dt zdot          (old zdot)
//   xdot' = xdot + dt (2 a - 0.4 xdot)
// Healthy band z in [0.5, 2.0], closed: the boundary is healthy. Reward on
// the current state: xdot - 0.1 a^2 + 1{healthy(s)}. done when the next
// state leaves the band. mu0: z ~ U(1.1, 1.3), xdot, zdot ~ U(-0.05, 0.05).
// Hover needs a = 2/3; sustained forward speed tops out near 5 * mean(a).
class HopperLiteEnv final : public Env {
 public:
  HopperLiteEnv() {
    spec_.id = "hopper_lite";
    spec_.state_dim = 3;
    spec_.action_dim = 1;
    spec_.horizon = 400;
    spec_.gamma = 0.99;
    spec_.action_low = Eigen::VectorXd::Constant(1, -1.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 1.0);
    spec_.random_ref = kHopperRandomRef;
    spec_.expert_ref = kHopperExpertRef;
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(Rng& rng) const override {
    const double z = rng.uniform(1.1, 1.3);
    const double xdot = rng.uniform(-0.05, 0.05);
    const double zdot = rng.uniform(-0.05, 0.05);
    Eigen::VectorXd s(3);
    s << z, xdot, zdot;
    return s;
  }

  StepResult step(const Eigen::VectorXd& state,
                  const Eigen::VectorXd& action) const override {
    if (!state.allFinite() || !action.allFinite())
      throw std::invalid_argument("hopper_lite: non-finite state or action");
    const double a = clip_action(action)(0);
    const double z = state(0), xdot = state(1), zdot = state(2);

    const double reward = xdot - 0.1 * a * a + (healthy(z) ? 1.0 : 0.0);

    StepResult out;
    out.next_state.resize(3);
    out.next_state(2) = zdot + kDt * (15.0 * a - 10.0);
    out.next_state(0) = z + kDt * zdot;
    out.next_state(1) = xdot + kDt * (2.0 * a - 0.4 * xdot);
    out.reward = reward;
    out.done = !healthy(out.next_state(0));
    return out;
  }

  bool terminal(const Eigen::VectorXd& state) const override {
    return !healthy(state(0));
  }

 private:
  static constexpr double kDt = 0.05;
  static bool healthy(double z) { return z >= 0.5 && z <= 2.0; }

  EnvSpec spec_;
};

}  // namespace

Eigen::VectorXd Env::reset_seeded(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "env.reset"));
  return reset(rng);
}

Eigen::VectorXd Env::clip_action(const Eigen::VectorXd& a) const {
  const EnvSpec& sp = spec();
  return a.cwiseMax(sp.action_low).cwiseMin(sp.action_high);
}

std::unique_ptr<Env> make_env(const std::string& env_id) {
  if (env_id == "pendulum") return std::make_unique<PendulumEnv>();
  if (env_id == "hopper_lite") return std::make_unique<HopperLiteEnv>();
  throw std::invalid_argument("unknown env id: " + env_id);
}

EnvSpec env_spec(const std::string& env_id) { return make_env(env_id)->spec(); }

}  // namespace mbrl
