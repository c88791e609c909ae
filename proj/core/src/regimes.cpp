#include "mbrl/regimes.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/pmdp.hpp"

namespace mbrl {

using nlohmann::json;

namespace {

// Materialize a dataset from row vectors collected during the online run.
TransitionDataset stream_to_dataset(const EnvSpec& spec,
                                    const std::vector<Transition>& stream,
                                    const std::string& regime) {
  if (stream.empty()) throw std::logic_error("regimes: empty stream");
  TransitionDataset ds;
  ds.spec = spec;
  ds.regime = regime;
  const Eigen::Index n = static_cast<Eigen::Index>(stream.size());
  ds.s.resize(n, spec.state_dim);
  ds.a.resize(n, spec.action_dim);
  ds.s_next.resize(n, spec.state_dim);
  ds.r.resize(n);
  ds.done.resize(stream.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.s.row(i) = stream[i].s;
    ds.a.row(i) = stream[i].a;
    ds.s_next.row(i) = stream[i].s_next;
    ds.r(i) = stream[i].r;
    ds.done[i] = stream[i].done ? 1 : 0;
  }
  return ds;
}

double tail_mean(const std::vector<double>& v, int window) {
  const int n = static_cast<int>(v.size());
  const int k = std::min(window, n);
  return std::accumulate(v.end() - k, v.end(), 0.0) / k;
}

}  // namespace

OnlineSacResult train_online_sac(const Env& env, const OnlineSacConfig& cfg,
                                 std::uint64_t seed) {
  if (cfg.max_steps < 1) throw std::invalid_argument("online sac: max_steps");
  const EnvSpec& spec = env.spec();
  const double medium_threshold =
      spec.random_ref + cfg.medium_fraction * (spec.expert_ref - spec.random_ref);
  const double expert_threshold =
      spec.random_ref + cfg.expert_fraction * (spec.expert_ref - spec.random_ref);

  Rng rng(derive_seed(seed, "online.rng"));
  SacAgent agent(spec, cfg.sac, derive_seed(seed, "online.agent"));
  ReplayBuffer buffer(cfg.replay_capacity, spec.state_dim, spec.action_dim);
  const Policy warmup = uniform_random_policy(spec);

  std::vector<Transition> stream;
  stream.reserve(static_cast<std::size_t>(cfg.max_steps));
  std::vector<double> episode_returns;

  bool medium_reached = false;
  long long medium_step = -1, updates = 0, updates_before_medium = 0;
  SacAgent medium_agent = agent;
  std::vector<Transition> medium_stream;

  Eigen::MatrixXd bs, ba, bsn;
  Eigen::VectorXd br, bdone;

  Eigen::VectorXd s = env.reset(rng);
  double ep_ret = 0.0;
  int ep_len = 0;
  long long step = 0;
  bool expert_reached = false;
  for (; step < cfg.max_steps; ++step) {
    const Eigen::VectorXd a =
        step < cfg.warmup_steps ? warmup(s, rng) : agent.act_sample(s, rng);
    const StepResult res = env.step(s, a);
    stream.push_back({s, a, res.reward, res.next_state, res.done});
    buffer.add(s.transpose(), a.transpose(),
               Eigen::VectorXd::Constant(1, res.reward),
               res.next_state.transpose(),
               Eigen::VectorXd::Constant(1, res.done ? 1.0 : 0.0));
    ep_ret += res.reward;
    ++ep_len;

    if (step >= cfg.warmup_steps &&
        buffer.size() >= static_cast<long long>(cfg.sac.batch_size)) {
      buffer.sample(cfg.sac.batch_size, rng, bs, ba, br, bsn, bdone);
      agent.update(bs, ba, br, bsn, bdone, rng);
      ++updates;
    }

    if (res.done || ep_len >= spec.horizon) {
      episode_returns.push_back(ep_ret);
      const int n_eps = static_cast<int>(episode_returns.size());
      if (n_eps >= cfg.avg_window) {
        const double avg = tail_mean(episode_returns, cfg.avg_window);
        if (!medium_reached && avg >= medium_threshold) {
          medium_reached = true;
          medium_step = step + 1;
          medium_agent = agent;
          medium_stream = stream;
          updates_before_medium = updates;
        }
        if (medium_reached && avg >= expert_threshold) {
          expert_reached = true;
          ++step;
          break;
        }
      }
      s = env.reset(rng);
      ep_ret = 0.0;
      ep_len = 0;
    } else {
      s = res.next_state;
    }
  }

  if (!medium_reached) {
    // Threshold never hit inside the step budget: fall back to the final
    // agent and the whole stream, flagged in the result.
    medium_agent = agent;
    medium_stream = stream;
    medium_step = step;
    updates_before_medium = updates;
  }

  OnlineSacResult out{
      std::move(medium_agent),
      std::move(agent),
      stream_to_dataset(spec, medium_stream, "medium_replay"),
      medium_reached,
      expert_reached,
      medium_step,
      step,
      updates_before_medium,
      std::move(episode_returns)};

  json meta;
  meta["policy"] = "online_sac_stream";
  meta["warmup_random_steps"] = cfg.warmup_steps;
  meta["sac_updates_in_stream"] = out.updates_before_medium;
  meta["medium_threshold"] = medium_threshold;
  meta["medium_threshold_reached"] = out.medium_reached;
  meta["steps"] = out.medium_step;
  meta["episodes"] =
      out.medium_replay.episode_ranges().size();
  out.medium_replay.behavior_meta_json = meta.dump();
  return out;
}

Policy sac_policy(const SacAgent& agent) {
  return [&agent](const Eigen::VectorXd& s, Rng& rng) {
    return agent.act_sample(s, rng);
  };
}

RegimeSuite make_regime_suite(const Env& env, const RegimeConfig& cfg,
                              std::uint64_t seed) {
  const EnvSpec& spec = env.spec();

  TransitionDataset random_ds = collect(env, uniform_random_policy(spec),
                                        cfg.n_random,
                                        derive_seed(seed, "regime.random"));
  random_ds.regime = "random";
  random_ds.behavior_meta_json =
      json{{"policy", "uniform_random"}, {"n_steps", cfg.n_random}}.dump();

  OnlineSacResult online =
      train_online_sac(env, cfg.online, derive_seed(seed, "regime.online"));

  const EvalResult medium_eval =
      evaluate_online(online.medium_agent, env, cfg.meta_eval_episodes,
                      derive_seed(seed, "regime.eval.medium"));
  const EvalResult expert_eval =
      evaluate_online(online.expert_agent, env, cfg.meta_eval_episodes,
                      derive_seed(seed, "regime.eval.expert"));

  TransitionDataset medium_ds =
      collect(env, sac_policy(online.medium_agent), cfg.n_medium,
              derive_seed(seed, "regime.medium"));
  medium_ds.regime = "medium";
  medium_ds.behavior_meta_json =
      json{{"policy", "sac_medium_checkpoint"},
           {"checkpoint_step", online.medium_step},
           {"threshold_reached", online.medium_reached},
           {"policy_eval_return", medium_eval.mean_return}}
          .dump();

  TransitionDataset expert_ds =
      collect(env, sac_policy(online.expert_agent), cfg.n_expert,
              derive_seed(seed, "regime.expert"));
  expert_ds.regime = "medium_expert";
  TransitionDataset medium_expert = concat(medium_ds, expert_ds);
  medium_expert.regime = "medium_expert";
  medium_expert.behavior_meta_json =
      json{{"policy", "concat(medium, expert)"},
           {"medium_steps", cfg.n_medium},
           {"expert_steps", cfg.n_expert},
           {"medium_policy_eval_return", medium_eval.mean_return},
           {"expert_policy_eval_return", expert_eval.mean_return},
           {"expert_converged", online.expert_reached}}
          .dump();

  TransitionDataset replay = std::move(online.medium_replay);
  return RegimeSuite{std::move(random_ds), std::move(medium_ds),
                     std::move(replay), std::move(medium_expert),
                     std::move(online)};
}

}  // namespace mbrl
