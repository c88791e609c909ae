#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mbrl/env.hpp"
#include "mbrl/rng.hpp"

using namespace mbrl;

TEST_CASE("pendulum spec constants") {
  EnvSpec sp = env_spec("pendulum");
  CHECK(sp.state_dim == 3);
  CHECK(sp.action_dim == 1);
  CHECK(sp.horizon == 200);
  CHECK(sp.gamma == doctest::Approx(0.99));
  CHECK(sp.action_low(0) == doctest::Approx(-2.0));
  CHECK(sp.action_high(0) == doctest::Approx(2.0));
  CHECK(sp.expert_ref > sp.random_ref);
}

TEST_CASE("hopper_lite spec constants") {
  EnvSpec sp = env_spec("hopper_lite");
  CHECK(sp.state_dim == 3);
  CHECK(sp.action_dim == 1);
  CHECK(sp.horizon == 400);
  CHECK(sp.action_low(0) == doctest::Approx(-1.0));
  CHECK(sp.action_high(0) == doctest::Approx(1.0));
  CHECK(sp.expert_ref > sp.random_ref);
}

TEST_CASE("unknown env id throws") {
  CHECK_THROWS_AS(make_env("cartpole"), std::invalid_argument);
  CHECK_THROWS_AS(env_spec(""), std::invalid_argument);
}

TEST_CASE("pendulum step matches the hand-computed update") {
  auto env = make_env("pendulum");
  // th = 0.3, thdot = 1, u = 0.5
  Eigen::VectorXd s(3), a(1);
  s << std::cos(0.3), std::sin(0.3), 1.0;
  a << 0.5;
  StepResult r = env->step(s, a);
  CHECK(r.reward == doctest::Approx(-0.19025).epsilon(1e-12));
  CHECK(r.next_state(2) == doctest::Approx(1.2966401549960047).epsilon(1e-12));
  CHECK(r.next_state(0) == doctest::Approx(0.9341837126984391).epsilon(1e-12));
  CHECK(r.next_state(1) == doctest::Approx(0.35679236388824265).epsilon(1e-12));
  CHECK_FALSE(r.done);
}

TEST_CASE("pendulum at rest upright with zero torque stays put") {
  auto env = make_env("pendulum");
  Eigen::VectorXd s(3), a(1);
  s << 1.0, 0.0, 0.0;  // th = 0
  a << 0.0;
  StepResult r = env->step(s, a);
  CHECK(r.reward == doctest::Approx(0.0));
  CHECK(r.next_state(0) == doctest::Approx(1.0));
  CHECK(r.next_state(1) == doctest::Approx(0.0));
  CHECK(r.next_state(2) == doctest::Approx(0.0));
}

TEST_CASE("pendulum clamps angular speed and clips torque") {
  auto env = make_env("pendulum");
  Eigen::VectorXd s(3), a(1);
  s << 0.0, 1.0, 7.9;  // th = pi/2: thddot = 15 + 3u
  a << 50.0;           // clipped to 2 -> thddot = 21 -> thdot' = 8.95 -> 8
  StepResult r = env->step(s, a);
  CHECK(r.next_state(2) == doctest::Approx(8.0));
  // reward uses the clipped torque
  const double pi = std::acos(-1.0);
  double expect = -(pi * pi / 4 + 0.1 * 7.9 * 7.9 + 0.001 * 4.0);
  CHECK(r.reward == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("pendulum never terminates") {
  auto env = make_env("pendulum");
  Rng rng(3);
  Eigen::VectorXd s = env->reset(rng);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd a(1);
    a << rng.uniform(-2.0, 2.0);
    StepResult r = env->step(s, a);
    CHECK_FALSE(r.done);
    CHECK_FALSE(env->terminal(r.next_state));
    s = r.next_state;
  }
}

TEST_CASE("pendulum reset starts near upright") {
  auto env = make_env("pendulum");
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd s = env->reset(rng);
    double th = std::atan2(s(1), s(0));
    CHECK(std::abs(th) <= 0.3);
    CHECK(std::abs(s(2)) <= 0.3);
    CHECK(s.head(2).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("hopper_lite step matches the hand-computed update") {
  auto env = make_env("hopper_lite");
  Eigen::VectorXd s(3), a(1);
  s << 1.4, 0.5, 0.2;  // z, xdot, zdot
  a << 0.3;
  StepResult r = env->step(s, a);
  // reward on the current state: 0.5 - 0.1 * 0.09 + 1
  CHECK(r.reward == doctest::Approx(1.491).epsilon(1e-12));
  CHECK(r.next_state(0) == doctest::Approx(1.41).epsilon(1e-12));   // z + dt zdot
  CHECK(r.next_state(1) == doctest::Approx(0.52).epsilon(1e-12));   // xdot
  CHECK(r.next_state(2) == doctest::Approx(-0.075).epsilon(1e-12)); // zdot
  CHECK_FALSE(r.done);
}

TEST_CASE("hopper_lite healthy band is closed") {
  auto env = make_env("hopper_lite");
  Eigen::VectorXd s(3);
  s << 0.5, 0.0, 0.0;
  CHECK_FALSE(env->terminal(s));
  s(0) = 2.0;
  CHECK_FALSE(env->terminal(s));
  s(0) = 0.4999;
  CHECK(env->terminal(s));
  s(0) = 2.0001;
  CHECK(env->terminal(s));
}

TEST_CASE("hopper_lite terminates when the next height leaves the band") {
  auto env = make_env("hopper_lite");
  Eigen::VectorXd s(3), a(1);
  s << 0.51, 0.0, -0.5;  // z' = 0.51 - 0.025 = 0.485 < 0.5
  a << 0.0;
  StepResult r = env->step(s, a);
  CHECK(r.done);
  // the unhealthy flag charges on the NEXT state; the current one was healthy
  CHECK(r.reward == doctest::Approx(1.0));
}

TEST_CASE("hopper_lite unhealthy state earns no bonus") {
  auto env = make_env("hopper_lite");
  Eigen::VectorXd s(3), a(1);
  s << 0.4, 0.3, 0.0;
  a << 0.0;
  StepResult r = env->step(s, a);
  CHECK(r.reward == doctest::Approx(0.3));
}

TEST_CASE("reset_seeded is reproducible") {
  auto env = make_env("hopper_lite");
  CHECK(env->reset_seeded(99).isApprox(env->reset_seeded(99), 0.0));
  CHECK_FALSE(env->reset_seeded(99).isApprox(env->reset_seeded(100), 0.0));
}

TEST_CASE("non-finite inputs are rejected") {
  auto env = make_env("pendulum");
  Eigen::VectorXd s(3), a(1);
  s << 1.0, 0.0, std::nan("");
  a << 0.0;
  CHECK_THROWS_AS(env->step(s, a), std::invalid_argument);
}
