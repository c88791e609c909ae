#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mbrl/dataset.hpp"
#include "mbrl/models.hpp"

namespace mbrl {

// Density threshold below which (inclusive) an evaluation point counts as
// an outlier for that dimension; outliers are excluded from the mean
// log-likelihood and the likelihood ratio of that dimension.
constexpr double kPMin = 1.47e-6;

// Inclusive threshold rule in log space: density <= p_min.
bool is_outlier(double logpdf, double p_min = kPMin);

// 1 - SSE/SST. Undefined (flag false) when the targets have zero variance.
double r2(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets,
          bool* defined = nullptr);

// max_i |F(q_i) - q_i| with F the empirical CDF of the quantiles under the
// "<=" convention.
double ks_statistic(std::vector<double> quantiles);

// Equal-width bins on [0, 1]; boundary values go to the lower bin, except
// exact 0 which goes to the first bin.
std::vector<long long> quantile_histogram(const std::vector<double>& quantiles,
                                          int n_bins = 20);

struct DimMetrics {
  double r2 = 0.0;
  bool r2_defined = true;
  double log_lik = 0.0;   // mean per-point log-density, outliers excluded
  bool log_lik_defined = true;
  double lr = 1.0;        // exp(mean model lp - mean baseline lp)
  bool lr_defined = true;
  bool baseline_floored = false;
  double or_rate = 0.0;
  double ks = 0.0;
  std::vector<long long> histogram;
  std::vector<double> r2_long;                // index L-1, L = 1..l_max
  std::vector<std::uint8_t> r2_long_defined;
  std::vector<double> ks_long;
};

struct MetricReport {
  std::string model_id;
  std::string dataset_id;
  long long n_points = 0;
  int n_bins = 20;
  int l_max = 0;
  int n_population = 0;
  long long n_starts = 0;
  std::vector<DimMetrics> dims;  // d_s state dims then reward

  // Aggregates: arithmetic mean over output dims; undefined dims are
  // excluded from the R2 aggregate (flagged below).
  double agg_r2 = 0.0;
  bool agg_r2_defined = true;
  double agg_log_lik = 0.0;
  double agg_lr = 0.0;
  double agg_or = 0.0;
  double agg_ks = 0.0;
  std::vector<double> agg_r2_long;
  std::vector<double> agg_ks_long;
};

// One-step (static) metrics of a model on an evaluation set: R2 of the mean
// prediction, outlier rate, outlier-excluded log-likelihood and likelihood
// ratio against per-dim unconditional Gaussian baselines, PIT-based KS and
// quantile histograms. All in raw space; autoregressive conditioning is
// teacher-forced.
MetricReport static_metrics(const DynamicsModel& model,
                            const TransitionDataset& eval_set,
                            const std::string& model_id = "",
                            const std::string& dataset_id = "",
                            int n_bins = 20, double p_min = kPMin);

// Consecutive ground-truth segment: states has one more row than actions.
struct Trace {
  Eigen::MatrixXd states;   // (T+1) x d_s
  Eigen::MatrixXd actions;  // T x action_dim
  Eigen::VectorXd rewards;  // T
  Eigen::Index length() const { return actions.rows(); }
};

// Episodes of the dataset as traces, longest first, keeping those with at
// least min_len transitions; at most max_traces (0 = no cap).
std::vector<Trace> dataset_traces(const TransitionDataset& ds, int min_len,
                                  int max_traces = 0);

struct LongHorizonConfig {
  int l_max = 20;
  int n = 100;               // population size per start
  int starts_per_trace = 50; // evenly spaced over valid start offsets
  std::uint64_t seed = 0;
};

// Monte-Carlo long-horizon curves: from each start, n model trajectories
// replay the trace's actions for l_max steps. R2(L) scores the per-start
// sample mean at depth L against the ground truth; KS(L) feeds the
// order-statistic rank of the ground truth within the n samples into the
// KS statistic. Results are pooled over starts and traces and written into
// the report's dims and aggregate curves.
void add_long_horizon(MetricReport& report, const DynamicsModel& model,
                      const std::vector<Trace>& traces,
                      const LongHorizonConfig& cfg);

// Recompute the aggregate block from the per-dim entries.
void finalize_aggregates(MetricReport& report);

}  // namespace mbrl
