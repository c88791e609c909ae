#include "mbrl/pmdp.hpp"

#include <stdexcept>
#include <string>

namespace mbrl {

void PMdp::validate() const {
  if (!model || !env) throw std::invalid_argument("pmdp: null model or env");
  if (lambda < 0.0) throw std::invalid_argument("pmdp: lambda must be >= 0");
  if (h < 1) throw std::invalid_argument("pmdp: horizon must be >= 1");
}

void pmdp_step_batch(const PMdp& pmdp, const Eigen::MatrixXd& s,
                     const Eigen::MatrixXd& a, Rng& rng,
                     Eigen::MatrixXd& s_next, Eigen::VectorXd& r_tilde,
                     Eigen::VectorXd& done) {
  pmdp.validate();
  Eigen::VectorXd r_hat;
  pmdp.model->sample_batch(s, a, rng, s_next, r_hat);
  if (!s_next.allFinite() || !r_hat.allFinite())
    throw NumericalError(
        "pmdp: model produced non-finite outputs (batch of " +
        std::to_string(s.rows()) + " rows)");
  if (pmdp.lambda > 0.0) {
    r_tilde = r_hat -
              pmdp.lambda * penalty_batch(*pmdp.model, pmdp.heuristic, s, a);
  } else {
    r_tilde = r_hat;
  }
  const Eigen::Index b = s.rows();
  done.resize(b);
  for (Eigen::Index i = 0; i < b; ++i)
    done(i) = pmdp.env->terminal(s_next.row(i).transpose()) ? 1.0 : 0.0;
}

PmdpStep pmdp_step(const PMdp& pmdp, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& a, Rng& rng) {
  Eigen::MatrixXd s_next;
  Eigen::VectorXd r, done;
  pmdp_step_batch(pmdp, s.transpose(), a.transpose(), rng, s_next, r, done);
  return {s_next.row(0).transpose(), r(0), done(0) != 0.0};
}

ReplayBuffer::ReplayBuffer(long long capacity, int state_dim, int action_dim)
    : capacity_(capacity),
      s_(capacity, state_dim),
      a_(capacity, action_dim),
      s_next_(capacity, state_dim),
      r_(capacity),
      done_(capacity) {
  if (capacity < 1) throw std::invalid_argument("buffer: capacity must be >= 1");
}

void ReplayBuffer::add(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                       const Eigen::VectorXd& r, const Eigen::MatrixXd& s_next,
                       const Eigen::VectorXd& done) {
  const Eigen::Index n = s.rows();
  if (a.rows() != n || r.size() != n || s_next.rows() != n || done.size() != n)
    throw std::invalid_argument("buffer: inconsistent row counts");
  if (!s.allFinite() || !a.allFinite() || !r.allFinite() ||
      !s_next.allFinite())
    throw std::invalid_argument("buffer: non-finite transition rejected");
  for (Eigen::Index i = 0; i < n; ++i) {
    s_.row(head_) = s.row(i);
    a_.row(head_) = a.row(i);
    s_next_.row(head_) = s_next.row(i);
    r_(head_) = r(i);
    done_(head_) = done(i);
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }
}

void ReplayBuffer::sample(int n, Rng& rng, Eigen::MatrixXd& s,
                          Eigen::MatrixXd& a, Eigen::VectorXd& r,
                          Eigen::MatrixXd& s_next,
                          Eigen::VectorXd& done) const {
  if (size_ == 0) throw std::logic_error("buffer: sample from empty buffer");
  s.resize(n, s_.cols());
  a.resize(n, a_.cols());
  s_next.resize(n, s_next_.cols());
  r.resize(n);
  done.resize(n);
  for (int i = 0; i < n; ++i) {
    const long long j = rng.uniform_int(0, size_ - 1);
    s.row(i) = s_.row(j);
    a.row(i) = a_.row(j);
    s_next.row(i) = s_next_.row(j);
    r(i) = r_(j);
    done(i) = done_(j);
  }
}

double ReplayBuffer::mean_reward() const {
  if (size_ == 0) throw std::logic_error("buffer: empty");
  return r_.head(size_).mean();
}

RolloutStats generate_rollouts(const PMdp& pmdp, const RolloutPolicy& policy,
                               const Eigen::MatrixXd& dataset_states,
                               int n_starts, ReplayBuffer& buffer, Rng& rng) {
  pmdp.validate();
  if (dataset_states.rows() == 0)
    throw std::invalid_argument("generate_rollouts: empty dataset");
  RolloutStats stats;
  stats.n_starts = n_starts;

  Eigen::MatrixXd cur(n_starts, dataset_states.cols());
  for (int i = 0; i < n_starts; ++i)
    cur.row(i) =
        dataset_states.row(rng.uniform_int(0, dataset_states.rows() - 1));

  for (int depth = 0; depth < pmdp.h && cur.rows() > 0; ++depth) {
    const Eigen::MatrixXd act = policy(cur, rng);
    Eigen::MatrixXd s_next;
    Eigen::VectorXd r_tilde, done;
    pmdp_step_batch(pmdp, cur, act, rng, s_next, r_tilde, done);
    buffer.add(cur, act, r_tilde, s_next, done);
    stats.n_transitions += cur.rows();

    const Eigen::Index alive = (done.array() == 0.0).count();
    if (depth < pmdp.h - 1) stats.n_truncated += cur.rows() - alive;
    Eigen::MatrixXd next(alive, cur.cols());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < done.size(); ++i)
      if (done(i) == 0.0) next.row(k++) = s_next.row(i);
    cur = std::move(next);
  }
  return stats;
}

}  // namespace mbrl
