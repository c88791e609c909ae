#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "mbrl/dataset.hpp"
#include "mbrl/env.hpp"

using namespace mbrl;
namespace fs = std::filesystem;

namespace {

TransitionDataset collect_pendulum(std::size_t n, std::uint64_t seed) {
  auto env = make_env("pendulum");
  return collect(*env, uniform_random_policy(env->spec()), n, seed);
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("collect returns exactly n transitions, deterministically") {
  TransitionDataset a = collect_pendulum(230, 5);
  TransitionDataset b = collect_pendulum(230, 5);
  CHECK(a.size() == 230);
  CHECK(a.s.isApprox(b.s, 0.0));
  CHECK(a.a.isApprox(b.a, 0.0));
  CHECK(a.r.isApprox(b.r, 0.0));
  CHECK(a.s_next.isApprox(b.s_next, 0.0));
  CHECK(a.done == b.done);

  TransitionDataset c = collect_pendulum(230, 6);
  CHECK_FALSE(a.s.isApprox(c.s, 0.0));
}

TEST_CASE("collected transitions are consistent with the env") {
  auto env = make_env("pendulum");
  TransitionDataset ds = collect_pendulum(100, 17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Transition t = ds.at(i);
    StepResult r = env->step(t.s, t.a);
    CHECK(r.next_state.isApprox(t.s_next, 0.0));
    CHECK(r.reward == t.r);
  }
}

TEST_CASE("pendulum episodes are horizon-bounded, none marked done") {
  TransitionDataset ds = collect_pendulum(450, 2);
  auto ranges = ds.episode_ranges();
  CHECK(ranges.size() == 3);  // 200 + 200 + trailing 50
  CHECK(ranges[0].second - ranges[0].first == 200);
  CHECK(ranges[2].second - ranges[2].first == 50);
  CHECK(std::count(ds.done.begin(), ds.done.end(), 1) == 0);
}

TEST_CASE("hopper_lite random collection hits terminal states") {
  auto env = make_env("hopper_lite");
  TransitionDataset ds =
      collect(*env, uniform_random_policy(env->spec()), 400, 3);
  CHECK(std::count(ds.done.begin(), ds.done.end(), 1) > 10);
  // every done row really is terminal for the env
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.done[i]) CHECK(env->terminal(ds.at(i).s_next));
}

TEST_CASE("split partitions without overlap") {
  TransitionDataset ds = collect_pendulum(100, 8);
  auto [train, val] = split(ds, 0.1, 21);
  CHECK(train.size() == 90);
  CHECK(val.size() == 10);

  // multiset equality through a sortable fingerprint
  auto key = [](const Transition& t) {
    return t.s.sum() + 10.0 * t.a.sum() + 100.0 * t.r + 1000.0 * t.s_next.sum();
  };
  std::multiset<double> all, parts;
  for (std::size_t i = 0; i < ds.size(); ++i) all.insert(key(ds.at(i)));
  for (std::size_t i = 0; i < train.size(); ++i) parts.insert(key(train.at(i)));
  for (std::size_t i = 0; i < val.size(); ++i) parts.insert(key(val.at(i)));
  CHECK(all == parts);

  auto [t2, v2] = split(ds, 0.1, 21);
  CHECK(t2.s.isApprox(train.s, 0.0));
  auto [t3, v3] = split(ds, 0.1, 22);
  CHECK_FALSE(v3.s.isApprox(val.s, 0.0));

  CHECK_THROWS_AS(split(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, 1.0, 1), std::invalid_argument);
}

TEST_CASE("compute_stats matches hand values") {
  TransitionDataset ds;
  ds.spec = env_spec("pendulum");
  ds.spec.state_dim = 1;
  ds.spec.action_dim = 1;
  ds.regime = "random";
  ds.s.resize(2, 1);
  ds.s << 0.0, 2.0;
  ds.a.resize(2, 1);
  ds.a << 1.0, 1.0;  // constant: std floored
  ds.r.resize(2);
  ds.r << -1.0, 1.0;
  ds.s_next.resize(2, 1);
  ds.s_next << 1.0, 1.0;  // delta = +1, -1
  ds.done = {0, 0};

  DatasetStats st = compute_stats(ds);
  CHECK(st.mean_s()(0) == doctest::Approx(1.0));
  CHECK(st.std_s()(0) == doctest::Approx(1.0));  // population std
  CHECK(st.mean_a()(0) == doctest::Approx(1.0));
  CHECK(st.std_a()(0) == doctest::Approx(1e-8)); // floor
  CHECK(st.mean_target()(0) == doctest::Approx(0.0));
  CHECK(st.std_target()(0) == doctest::Approx(1.0));
  CHECK(st.mean_target()(1) == doctest::Approx(0.0));
  CHECK(st.std_target()(1) == doctest::Approx(1.0));
}

TEST_CASE("standardize and destandardize are inverse maps") {
  Eigen::VectorXd mean(2), std(2), x(2);
  mean << 1.0, -2.0;
  std << 0.5, 3.0;
  x << 0.3, 4.0;
  Eigen::VectorXd z = standardize(x, mean, std);
  CHECK(z(0) == doctest::Approx((0.3 - 1.0) / 0.5));
  CHECK(destandardize(z, mean, std).isApprox(x, 1e-12));
}

TEST_CASE("concat stacks rows and keeps the spec") {
  TransitionDataset a = collect_pendulum(30, 1);
  TransitionDataset b = collect_pendulum(20, 2);
  TransitionDataset c = concat(a, b);
  CHECK(c.size() == 50);
  CHECK(c.s.topRows(30).isApprox(a.s, 0.0));
  CHECK(c.s.bottomRows(20).isApprox(b.s, 0.0));
  CHECK(c.spec.id == "pendulum");
}

TEST_CASE("dataset file round-trips bit-exactly") {
  auto env = make_env("hopper_lite");
  TransitionDataset ds =
      collect(*env, uniform_random_policy(env->spec()), 120, 9);
  ds.regime = "medium";
  ds.behavior_meta_json = "{\"note\":\"fixture\"}";
  const std::string path = temp_path("mbrl_test_roundtrip.ds");
  save_dataset(ds, path);
  TransitionDataset back = load_dataset(path);
  std::remove(path.c_str());

  CHECK(back.spec.id == ds.spec.id);
  CHECK(back.spec.horizon == ds.spec.horizon);
  CHECK(back.regime == "medium");
  CHECK(back.behavior_meta_json == ds.behavior_meta_json);
  CHECK(back.s.isApprox(ds.s, 0.0));
  CHECK(back.a.isApprox(ds.a, 0.0));
  CHECK(back.r.isApprox(ds.r, 0.0));
  CHECK(back.s_next.isApprox(ds.s_next, 0.0));
  CHECK(back.done == ds.done);
}

TEST_CASE("export_jsonl writes one record per transition") {
  TransitionDataset ds = collect_pendulum(7, 4);
  const std::string path = temp_path("mbrl_test_export.jsonl");
  export_jsonl(ds, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  in.close();
  std::remove(path.c_str());
  CHECK(lines == 7);
}

TEST_CASE("uniform_random_policy respects bounds and seeding") {
  EnvSpec sp = env_spec("pendulum");
  Policy p = uniform_random_policy(sp);
  Rng r1(6), r2(6);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd a = p(s, r1);
    CHECK(a(0) >= -2.0);
    CHECK(a(0) < 2.0);
    CHECK(a(0) == p(s, r2)(0));
  }
}
