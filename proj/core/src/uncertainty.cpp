#include "mbrl/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

namespace mbrl {

std::string to_string(Heuristic h) {
  switch (h) {
    case Heuristic::kMa: return "ma";
    case Heuristic::kMpd: return "mpd";
    case Heuristic::kEsd: return "esd";
    case Heuristic::kSingleSigma: return "sigma";
  }
  throw std::logic_error("bad heuristic");
}

Heuristic heuristic_from_string(const std::string& s) {
  if (s == "ma") return Heuristic::kMa;
  if (s == "mpd") return Heuristic::kMpd;
  if (s == "esd") return Heuristic::kEsd;
  if (s == "sigma") return Heuristic::kSingleSigma;
  throw std::invalid_argument("unknown heuristic: " + s);
}

namespace {
BatchMoments to_batch(const std::vector<MemberMoments>& members) {
  BatchMoments bm;
  for (const auto& m : members) {
    bm.mu.push_back(m.mu.transpose());
    bm.sigma.push_back(m.sigma.transpose());
  }
  return bm;
}
}  // namespace

Eigen::VectorXd ma_batch(const BatchMoments& m) {
  if (m.members() < 1) throw std::invalid_argument("ma: needs >= 1 member");
  Eigen::VectorXd out = m.sigma[0].rowwise().norm();
  for (int l = 1; l < m.members(); ++l)
    out = out.cwiseMax(m.sigma[l].rowwise().norm());
  return out;
}

Eigen::VectorXd mpd_batch(const BatchMoments& m) {
  if (m.members() < 2) throw std::invalid_argument("mpd: needs >= 2 members");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.mu[0].rows());
  for (int l = 0; l < m.members(); ++l)
    for (int k = l + 1; k < m.members(); ++k)
      out = out.cwiseMax((m.mu[l] - m.mu[k]).rowwise().norm());
  return out;
}

Eigen::VectorXd esd_batch(const BatchMoments& m) {
  const int d = m.members();
  if (d < 1) throw std::invalid_argument("esd: needs >= 1 member");
  const Eigen::Index b = m.mu[0].rows();
  const Eigen::Index dims = m.mu[0].cols();
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(b, dims);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(b, dims);
  for (int l = 0; l < d; ++l) {
    second.array() +=
        m.sigma[l].array().square() + m.mu[l].array().square();
    mean += m.mu[l];
  }
  second /= d;
  mean /= d;
  Eigen::ArrayXXd var = second.array() - mean.array().square();
  if ((var < -1e-12).any())
    throw std::runtime_error("esd: negative mixture variance");
  var = var.max(0.0);
  return var.rowwise().sum().sqrt().matrix();
}

double ma(const std::vector<MemberMoments>& members) {
  return ma_batch(to_batch(members))(0);
}

double mpd(const std::vector<MemberMoments>& members) {
  return mpd_batch(to_batch(members))(0);
}

double esd(const std::vector<MemberMoments>& members) {
  return esd_batch(to_batch(members))(0);
}

Eigen::VectorXd heuristic_from_moments(Heuristic h, int member_count,
                                       const BatchMoments& m) {
  switch (h) {
    case Heuristic::kMa:
      if (member_count < 2)
        throw std::invalid_argument("ma heuristic needs >= 2 members (use sigma)");
      return ma_batch(m);
    case Heuristic::kMpd:
      return mpd_batch(m);
    case Heuristic::kEsd:
      if (member_count < 2)
        throw std::invalid_argument("esd heuristic needs >= 2 members (use sigma)");
      return esd_batch(m);
    case Heuristic::kSingleSigma:
      if (member_count != 1)
        throw std::invalid_argument("sigma heuristic needs exactly 1 member");
      return ma_batch(m);
  }
  throw std::logic_error("bad heuristic");
}

Eigen::VectorXd penalty_batch(const DynamicsModel& model, Heuristic h,
                              const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& a) {
  return heuristic_from_moments(h, model.member_count(),
                                model.moments_batch(s, a));
}

double penalty(const DynamicsModel& model, Heuristic h,
               const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  return penalty_batch(model, h, s.transpose(), a.transpose())(0);
}

}  // namespace mbrl
