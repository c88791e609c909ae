#include "mbrl/mopo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbrl {

MopoResult mopo_train(const TransitionDataset& dataset,
                      const DynamicsModel& model, const Env& env,
                      const MopoConfig& cfg) {
  if (dataset.size() == 0) throw std::invalid_argument("mopo: empty dataset");
  if (cfg.rho_real < 0.0 || cfg.rho_real > 1.0)
    throw std::invalid_argument("mopo: rho_real outside [0, 1]");

  PMdp pmdp;
  pmdp.model = &model;
  pmdp.env = &env;
  pmdp.lambda = cfg.lambda;
  pmdp.heuristic = cfg.heuristic;
  pmdp.h = cfg.h;
  pmdp.validate();

  SacAgent agent(env.spec(), cfg.sac, derive_seed(cfg.seed, "mopo.agent"));

  MopoResult out{agent, {}, std::numeric_limits<double>::quiet_NaN(), -1, {},
                 0.0};
  if (cfg.updates == 0) return out;

  const int batch = cfg.sac.batch_size;
  const int n_real = static_cast<int>(std::llround(cfg.rho_real * batch));
  const int n_model = batch - n_real;

  ReplayBuffer buffer(cfg.buffer_capacity, env.spec().state_dim,
                      env.spec().action_dim);
  Rng rollout_rng(derive_seed(cfg.seed, "mopo.rollout"));
  Rng batch_rng(derive_seed(cfg.seed, "mopo.batch"));
  const RolloutPolicy policy = [&agent](const Eigen::MatrixXd& s, Rng& rng) {
    return agent.act_sample_batch(s, rng);
  };

  Eigen::MatrixXd bs, ba, bsn;
  Eigen::VectorXd br, bdone;
  Eigen::MatrixXd xs(batch, env.spec().state_dim);
  Eigen::MatrixXd xa(batch, env.spec().action_dim);
  Eigen::MatrixXd xsn(batch, env.spec().state_dim);
  Eigen::VectorXd xr(batch), xdone(batch);

  long long eval_index = 0;
  for (long long i = 0; i < cfg.updates; ++i) {
    if (i % cfg.rollout_every == 0) {
      const RolloutStats st = generate_rollouts(
          pmdp, policy, dataset.s, cfg.rollout_starts, buffer, rollout_rng);
      out.rollouts.n_starts += st.n_starts;
      out.rollouts.n_transitions += st.n_transitions;
      out.rollouts.n_truncated += st.n_truncated;
    }

    // Batch layout: model rows first, then the real rows (raw rewards).
    buffer.sample(n_model, batch_rng, bs, ba, br, bsn, bdone);
    xs.topRows(n_model) = bs;
    xa.topRows(n_model) = ba;
    xsn.topRows(n_model) = bsn;
    xr.head(n_model) = br;
    xdone.head(n_model) = bdone;
    for (int k = 0; k < n_real; ++k) {
      const long long j =
          batch_rng.uniform_int(0, static_cast<long long>(dataset.size()) - 1);
      xs.row(n_model + k) = dataset.s.row(j);
      xa.row(n_model + k) = dataset.a.row(j);
      xsn.row(n_model + k) = dataset.s_next.row(j);
      xr(n_model + k) = dataset.r(j);
      xdone(n_model + k) = dataset.done[j] ? 1.0 : 0.0;
    }
    agent.update(xs, xa, xr, xsn, xdone, batch_rng);

    if ((i + 1) % cfg.eval_every == 0 || i + 1 == cfg.updates) {
      const EvalResult ev =
          evaluate_online(agent, env, cfg.eval_episodes,
                          derive_seed(cfg.seed, "mopo.eval", eval_index++));
      if (!std::isfinite(ev.mean_return))
        throw NumericalError("mopo: non-finite evaluation return");
      out.curve.push_back({i + 1, ev.mean_return, ev.std_return});
      if (out.best_update < 0 || ev.mean_return > out.best_return) {
        out.best_return = ev.mean_return;
        out.best_update = i + 1;
        out.agent = agent;
      }
    }
  }
  out.buffer_mean_reward = buffer.mean_reward();
  return out;
}

}  // namespace mbrl
