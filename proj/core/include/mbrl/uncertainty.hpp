#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mbrl/models.hpp"

namespace mbrl {

// Scalar epistemic/aleatory heuristics u(s, a) feeding the pessimistic
// reward. All operate on RAW (destandardized) moments so the penalty scale
// is comparable to the reward scale.
enum class Heuristic { kMa, kMpd, kEsd, kSingleSigma };

std::string to_string(Heuristic h);
Heuristic heuristic_from_string(const std::string& s);  // ma|mpd|esd|sigma

// Max aleatory: max over members of the Euclidean norm of sigma.
double ma(const std::vector<MemberMoments>& members);
// Max pairwise distance between member means; needs >= 2 members.
double mpd(const std::vector<MemberMoments>& members);
// Per-dim standard deviation of the equally weighted mixture,
// sqrt((1/D) sum_l (sigma_l^2 + mu_l^2) - mean(mu)^2), reduced over dims by
// the Euclidean norm.
double esd(const std::vector<MemberMoments>& members);

// Batched forms over BatchMoments; one value per row.
Eigen::VectorXd ma_batch(const BatchMoments& m);
Eigen::VectorXd mpd_batch(const BatchMoments& m);
Eigen::VectorXd esd_batch(const BatchMoments& m);

// Dispatch by heuristic with member-count compatibility checks: MA, MPD and
// ESD need >= 2 members, SINGLE_SIGMA exactly one (where it equals MA).
double penalty(const DynamicsModel& model, Heuristic h,
               const Eigen::VectorXd& s, const Eigen::VectorXd& a);
Eigen::VectorXd penalty_batch(const DynamicsModel& model, Heuristic h,
                              const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& a);
Eigen::VectorXd heuristic_from_moments(Heuristic h, int member_count,
                                       const BatchMoments& m);

}  // namespace mbrl
