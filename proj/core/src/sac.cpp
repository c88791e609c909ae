#include "mbrl/sac.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

DenseNet make_policy(const EnvSpec& env, const SacConfig& cfg) {
  NetConfig nc;
  nc.input_dim = env.state_dim;
  nc.output_dim = env.action_dim;
  nc.hidden.assign(cfg.hidden_layers, cfg.hidden_units);
  nc.head_hidden = cfg.head_hidden;
  nc.activation = cfg.activation;
  nc.heads = HeadMode::kTwoHeads;
  return DenseNet(nc);
}

DenseNet make_q(const EnvSpec& env, const SacConfig& cfg) {
  NetConfig nc;
  nc.input_dim = env.state_dim + env.action_dim;
  nc.output_dim = 1;
  nc.hidden.assign(cfg.hidden_layers, cfg.hidden_units);
  nc.head_hidden = cfg.head_hidden;
  nc.activation = cfg.activation;
  nc.heads = HeadMode::kMeanOnly;
  return DenseNet(nc);
}
}  // namespace

SacAgent::SacAgent(const EnvSpec& env, SacConfig cfg, std::uint64_t seed)
    : env_(env),
      cfg_(cfg),
      pi_(make_policy(env, cfg)),
      q1_(make_q(env, cfg)),
      q2_(make_q(env, cfg)),
      tq1_(make_q(env, cfg)),
      tq2_(make_q(env, cfg)),
      log_alpha_(cfg.init_log_alpha),
      opt_pi_(pi_.param_count(), cfg.lr),
      opt_q1_(q1_.param_count(), cfg.lr),
      opt_q2_(q2_.param_count(), cfg.lr) {
  center_ = (env_.action_high + env_.action_low) / 2.0;
  scale_ = (env_.action_high - env_.action_low) / 2.0;
  if (!cfg_.has_target_entropy)
    cfg_.target_entropy = -static_cast<double>(env_.action_dim);
  Rng r_pi(derive_seed(seed, "sac.pi"));
  pi_.init_glorot(r_pi);
  Rng r_q1(derive_seed(seed, "sac.q1"));
  q1_.init_glorot(r_q1);
  Rng r_q2(derive_seed(seed, "sac.q2"));
  q2_.init_glorot(r_q2);
  tq1_.params() = q1_.params();
  tq2_.params() = q2_.params();
}

SacAgent::SacAgent(const EnvSpec& env, SacConfig cfg, DenseNet pi, DenseNet q1,
                   DenseNet q2, DenseNet tq1, DenseNet tq2, double log_alpha)
    : env_(env),
      cfg_(cfg),
      pi_(std::move(pi)),
      q1_(std::move(q1)),
      q2_(std::move(q2)),
      tq1_(std::move(tq1)),
      tq2_(std::move(tq2)),
      log_alpha_(log_alpha),
      opt_pi_(pi_.param_count(), cfg.lr),
      opt_q1_(q1_.param_count(), cfg.lr),
      opt_q2_(q2_.param_count(), cfg.lr) {
  center_ = (env_.action_high + env_.action_low) / 2.0;
  scale_ = (env_.action_high - env_.action_low) / 2.0;
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

Eigen::MatrixXd SacAgent::act_mean_batch(const Eigen::MatrixXd& s) const {
  Eigen::MatrixXd mu, ls;
  pi_.predict(s, mu, ls);
  Eigen::MatrixXd a = mu.array().tanh();
  a.array().rowwise() *= scale_.transpose().array();
  a.array().rowwise() += center_.transpose().array();
  return a;
}

Eigen::VectorXd SacAgent::act_mean(const Eigen::VectorXd& s) const {
  return act_mean_batch(s.transpose()).row(0).transpose();
}

SacAgent::Squash SacAgent::squash_sample(const Eigen::MatrixXd& mu,
                                         const Eigen::MatrixXd& ls,
                                         Rng& rng) const {
  Squash out;
  const Eigen::Index b = mu.rows(), k = mu.cols();
  Eigen::MatrixXd eps(b, k);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < k; ++j) eps(i, j) = rng.normal();
  out.u = mu + ls.array().exp().matrix().cwiseProduct(eps);
  out.t = out.u.array().tanh();
  out.a = out.t;
  out.a.array().rowwise() *= scale_.transpose().array();
  out.a.array().rowwise() += center_.transpose().array();

  out.logp.setZero(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double e = eps(i, j);
      lp += -ls(i, j) - kHalfLog2Pi - 0.5 * e * e;
      // log(1 - tanh^2 u) = 2 (log 2 - u - softplus(-2u))
      lp -= 2.0 * (kLog2 - out.u(i, j) - softplus(-2.0 * out.u(i, j)));
      lp -= std::log(scale_(j));
    }
    out.logp(i) = lp;
  }
  return out;
}

Eigen::MatrixXd SacAgent::act_sample_batch(const Eigen::MatrixXd& s,
                                           Rng& rng) const {
  Eigen::MatrixXd mu, ls;
  pi_.predict(s, mu, ls);
  return squash_sample(mu, ls, rng).a;
}

Eigen::VectorXd SacAgent::act_sample(const Eigen::VectorXd& s, Rng& rng) const {
  return act_sample_batch(s.transpose(), rng).row(0).transpose();
}

SacAgent::Losses SacAgent::update(const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& r,
                                  const Eigen::MatrixXd& s_next,
                                  const Eigen::VectorXd& done, Rng& rng) {
  const Eigen::Index b = s.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  const double alpha_now = std::exp(log_alpha_);
  Losses losses;

  // --- Q targets: y = r + gamma (1 - done)(min target-Q - alpha log pi) ---
  Eigen::MatrixXd mu2, ls2;
  pi_.predict(s_next, mu2, ls2);
  const Squash next = squash_sample(mu2, ls2, rng);
  Eigen::MatrixXd x_next(b, s.cols() + a.cols());
  x_next << s_next, next.a;
  Eigen::MatrixXd tq1v, tq2v, unused;
  tq1_.predict(x_next, tq1v, unused);
  tq2_.predict(x_next, tq2v, unused);
  const Eigen::VectorXd min_tq = tq1v.col(0).cwiseMin(tq2v.col(0));
  const Eigen::VectorXd y =
      r.array() + cfg_.gamma * (1.0 - done.array()) *
                      (min_tq.array() - alpha_now * next.logp.array());

  // --- Twin Q regression ---
  Eigen::MatrixXd x_sa(b, s.cols() + a.cols());
  x_sa << s, a;
  Eigen::VectorXd grad;
  const Eigen::MatrixXd d_ls_empty;
  {
    const ForwardCache c1 = q1_.forward(x_sa);
    const Eigen::VectorXd diff1 = c1.mu.col(0) - y;
    losses.q1 = diff1.squaredNorm() * inv_b;
    q1_.backward(c1, (2.0 * inv_b) * diff1, d_ls_empty, grad);
    opt_q1_.update(q1_.params(), grad);
  }
  {
    const ForwardCache c2 = q2_.forward(x_sa);
    const Eigen::VectorXd diff2 = c2.mu.col(0) - y;
    losses.q2 = diff2.squaredNorm() * inv_b;
    q2_.backward(c2, (2.0 * inv_b) * diff2, d_ls_empty, grad);
    opt_q2_.update(q2_.params(), grad);
  }

  // --- Policy: minimize mean(alpha log pi - min Q(s, a~)) ---
  const ForwardCache cpi = pi_.forward(s);
  const Squash cur = squash_sample(cpi.mu, cpi.ls, rng);
  Eigen::MatrixXd x_spi(b, s.cols() + a.cols());
  x_spi << s, cur.a;
  const ForwardCache cq1 = q1_.forward(x_spi);
  const ForwardCache cq2 = q2_.forward(x_spi);
  const Eigen::VectorXd q1v = cq1.mu.col(0), q2v = cq2.mu.col(0);
  const Eigen::VectorXd min_q = q1v.cwiseMin(q2v);
  losses.policy = (alpha_now * cur.logp - min_q).mean();
  losses.entropy = -cur.logp.mean();

  // dL/dQ of the selected net is -1/B per sample; route input gradients of
  // the frozen Q nets back to the action columns.
  Eigen::MatrixXd sel1 = Eigen::MatrixXd::Zero(b, 1), sel2 = sel1;
  for (Eigen::Index i = 0; i < b; ++i)
    (q1v(i) <= q2v(i) ? sel1 : sel2)(i, 0) = -inv_b;
  Eigen::MatrixXd gin1, gin2;
  q1_.backward(cq1, sel1, d_ls_empty, grad, &gin1);
  q2_.backward(cq2, sel2, d_ls_empty, grad, &gin2);
  const Eigen::MatrixXd d_action =
      gin1.rightCols(a.cols()) + gin2.rightCols(a.cols());

  // Upstream grads on the policy heads (see class comment for the algebra).
  const Eigen::ArrayXXd t = cur.t.array();
  const Eigen::ArrayXXd u_minus_mu = cur.u.array() - cpi.mu.array();
  const Eigen::ArrayXXd da_du =
      (1.0 - t.square()).rowwise() * scale_.transpose().array();
  const Eigen::ArrayXXd q_path = d_action.array() * da_du;
  Eigen::MatrixXd d_mu =
      ((alpha_now * inv_b) * 2.0 * t + q_path).matrix();
  Eigen::MatrixXd d_ls =
      ((alpha_now * inv_b) * (2.0 * t * u_minus_mu - 1.0) +
       q_path * u_minus_mu)
          .matrix();
  pi_.backward(cpi, d_mu, d_ls, grad);
  opt_pi_.update(pi_.params(), grad);

  // --- Temperature: gradient of -log_alpha * mean(log pi + target_entropy) ---
  const double alpha_grad = -(cur.logp.array() + cfg_.target_entropy).mean();
  ++alpha_step_;
  alpha_m_ = 0.9 * alpha_m_ + 0.1 * alpha_grad;
  alpha_v_ = 0.999 * alpha_v_ + 0.001 * alpha_grad * alpha_grad;
  const double mh = alpha_m_ / (1.0 - std::pow(0.9, alpha_step_));
  const double vh = alpha_v_ / (1.0 - std::pow(0.999, alpha_step_));
  log_alpha_ -= cfg_.lr * mh / (std::sqrt(vh) + 1e-8);
  losses.alpha = std::exp(log_alpha_);

  // --- Polyak target update ---
  tq1_.params() = (1.0 - cfg_.tau) * tq1_.params() + cfg_.tau * q1_.params();
  tq2_.params() = (1.0 - cfg_.tau) * tq2_.params() + cfg_.tau * q2_.params();

  if (!std::isfinite(losses.q1) || !std::isfinite(losses.q2) ||
      !std::isfinite(losses.policy))
    throw NumericalError("sac: non-finite loss");
  return losses;
}

void SacAgent::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["env_id"] = env_.id;
  manifest["log_alpha"] = log_alpha_;
  manifest["config"] = {{"hidden_units", cfg_.hidden_units},
                        {"hidden_layers", cfg_.hidden_layers},
                        {"head_hidden", cfg_.head_hidden},
                        {"activation", to_string(cfg_.activation)},
                        {"lr", cfg_.lr},
                        {"gamma", cfg_.gamma},
                        {"tau", cfg_.tau},
                        {"batch_size", cfg_.batch_size},
                        {"target_entropy", cfg_.target_entropy}};
  io::write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
  save_net(pi_, dir + "/pi.bin");
  save_net(q1_, dir + "/q1.bin");
  save_net(q2_, dir + "/q2.bin");
  save_net(tq1_, dir + "/tq1.bin");
  save_net(tq2_, dir + "/tq2.bin");
}

SacAgent SacAgent::load(const std::string& dir) {
  const json manifest = json::parse(io::read_text_file(dir + "/manifest.json"));
  if (manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported agent checkpoint version");
  const EnvSpec env = mbrl::env_spec(manifest.at("env_id").get<std::string>());
  SacConfig cfg;
  const json& jc = manifest.at("config");
  cfg.hidden_units = jc.at("hidden_units").get<int>();
  cfg.hidden_layers = jc.at("hidden_layers").get<int>();
  cfg.head_hidden = jc.at("head_hidden").get<int>();
  cfg.activation = activation_from_string(jc.at("activation").get<std::string>());
  cfg.lr = jc.at("lr").get<double>();
  cfg.gamma = jc.at("gamma").get<double>();
  cfg.tau = jc.at("tau").get<double>();
  cfg.batch_size = jc.at("batch_size").get<int>();
  cfg.target_entropy = jc.at("target_entropy").get<double>();
  cfg.has_target_entropy = true;
  return SacAgent(env, cfg, load_net(dir + "/pi.bin"), load_net(dir + "/q1.bin"),
                  load_net(dir + "/q2.bin"), load_net(dir + "/tq1.bin"),
                  load_net(dir + "/tq2.bin"),
                  manifest.at("log_alpha").get<double>());
}

EvalResult evaluate_online(const SacAgent& agent, const Env& env,
                           int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate_online: n_episodes");
  EvalResult out;
  out.returns.reserve(n_episodes);
  const int horizon = env.spec().horizon;
  for (int e = 0; e < n_episodes; ++e) {
    Rng rng(derive_seed(seed, "eval.episode", e));
    Eigen::VectorXd s = env.reset(rng);
    double ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const StepResult res = env.step(s, agent.act_mean(s));
      ret += res.reward;
      if (res.done) break;
      s = res.next_state;
    }
    out.returns.push_back(ret);
  }
  const Eigen::Map<const Eigen::VectorXd> rv(out.returns.data(), n_episodes);
  out.mean_return = rv.mean();
  if (n_episodes > 1)
    out.std_return = std::sqrt((rv.array() - out.mean_return).square().sum() /
                               (n_episodes - 1));
  return out;
}

double normalized_score(double ret, double random_ref, double expert_ref) {
  if (!(expert_ref > random_ref))
    throw std::invalid_argument("normalized_score: expert_ref must exceed random_ref");
  return 100.0 * (ret - random_ref) / (expert_ref - random_ref);
}

}  // namespace mbrl
