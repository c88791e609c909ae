#include "mbrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbrl/nnet.hpp"

namespace mbrl {

bool is_outlier(double logpdf, double p_min) {
  return logpdf <= std::log(p_min);
}

double r2(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets,
          bool* defined) {
  if (predictions.size() != targets.size() || targets.size() < 1)
    throw std::invalid_argument("r2: size mismatch or empty");
  const double mean = targets.mean();
  const double sst = (targets.array() - mean).square().sum();
  if (sst <= 0.0) {
    if (defined != nullptr) *defined = false;
    return 0.0;
  }
  if (defined != nullptr) *defined = true;
  const double sse = (predictions - targets).squaredNorm();
  return 1.0 - sse / sst;
}

double ks_statistic(std::vector<double> quantiles) {
  if (quantiles.empty()) throw std::invalid_argument("ks: empty quantiles");
  std::sort(quantiles.begin(), quantiles.end());
  const double n = static_cast<double>(quantiles.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    // F(q_i) counts values <= q_i; for ties that is the end of the run.
    std::size_t hi = i;
    while (hi + 1 < quantiles.size() && quantiles[hi + 1] == quantiles[i]) ++hi;
    const double f = static_cast<double>(hi + 1) / n;
    stat = std::max(stat, std::abs(f - quantiles[i]));
    i = hi;
  }
  return stat;
}

std::vector<long long> quantile_histogram(const std::vector<double>& quantiles,
                                          int n_bins) {
  if (n_bins <= 0) throw std::invalid_argument("histogram: n_bins must be > 0");
  std::vector<long long> counts(static_cast<std::size_t>(n_bins), 0);
  for (double q : quantiles) {
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("histogram: quantile outside [0, 1]");
    int idx = q == 0.0 ? 0 : static_cast<int>(std::ceil(q * n_bins)) - 1;
    idx = std::min(std::max(idx, 0), n_bins - 1);
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

namespace {

// Per-dim log-densities and PIT quantiles of the eval set under the model.
struct DimEval {
  std::vector<double> logpdf;
  std::vector<double> pit;
  std::vector<double> raw_target;
  std::vector<double> raw_mean;  // law mean (mixture mean for ensembles)
};

std::vector<DimEval> evaluate_dims(const DynamicsModel& model,
                                   const TransitionDataset& ds) {
  const BatchLaws laws = model.dim_laws_batch(ds.s, ds.a, ds.s_next, ds.r);
  const int dims = laws.dims();
  const auto n = static_cast<std::size_t>(ds.s.rows());
  const int d_s = model.state_dim();

  std::vector<DimEval> out(static_cast<std::size_t>(dims));
  for (int j = 0; j < dims; ++j) {
    DimEval& de = out[static_cast<std::size_t>(j)];
    de.logpdf.resize(n);
    de.pit.resize(n);
    de.raw_target.resize(n);
    de.raw_mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double target = j < d_s ? ds.s_next(ii, j) : ds.r(ii);
      const Eigen::VectorXd mu = laws.mu[j].row(ii).transpose();
      const Eigen::VectorXd sg = laws.sigma[j].row(ii).transpose();
      de.logpdf[i] = mixture_logpdf(laws.weights, mu, sg, target);
      de.pit[i] = mixture_cdf(laws.weights, mu, sg, target);
      de.raw_target[i] = target;
      de.raw_mean[i] = laws.weights.dot(mu);
    }
  }
  return out;
}

}  // namespace

MetricReport static_metrics(const DynamicsModel& model,
                            const TransitionDataset& eval_set,
                            const std::string& model_id,
                            const std::string& dataset_id, int n_bins,
                            double p_min) {
  if (eval_set.size() == 0)
    throw std::invalid_argument("static_metrics: empty evaluation set");
  MetricReport rep;
  rep.model_id = model_id;
  rep.dataset_id = dataset_id;
  rep.n_points = static_cast<long long>(eval_set.size());
  rep.n_bins = n_bins;

  const std::vector<DimEval> evals = evaluate_dims(model, eval_set);
  rep.dims.resize(evals.size());

  for (std::size_t j = 0; j < evals.size(); ++j) {
    const DimEval& de = evals[j];
    DimMetrics& dm = rep.dims[j];
    const auto n = de.logpdf.size();

    const Eigen::Map<const Eigen::VectorXd> targets(de.raw_target.data(), n);
    const Eigen::Map<const Eigen::VectorXd> means(de.raw_mean.data(), n);
    dm.r2 = r2(means, targets, &dm.r2_defined);

    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!is_outlier(de.logpdf[i], p_min)) keep.push_back(i);
    dm.or_rate = static_cast<double>(n - keep.size()) / static_cast<double>(n);

    if (keep.empty()) {
      dm.log_lik_defined = false;
      dm.lr_defined = false;
    } else {
      double acc = 0.0;
      for (std::size_t i : keep) acc += de.logpdf[i];
      dm.log_lik = acc / static_cast<double>(keep.size());

      // Unconditional per-dim Gaussian baseline: population moments of the
      // raw targets over the full eval set, std floored at 1e-8.
      const double bmean = targets.mean();
      double bvar = (targets.array() - bmean).square().mean();
      double bstd = std::sqrt(bvar);
      if (bstd < 1e-8) {
        bstd = 1e-8;
        dm.baseline_floored = true;
      }
      double bacc = 0.0;
      for (std::size_t i : keep)
        bacc += gaussian_logpdf(de.raw_target[i], bmean, bstd);
      const double baseline_ll = bacc / static_cast<double>(keep.size());
      dm.lr = std::exp(dm.log_lik - baseline_ll);
    }

    dm.ks = ks_statistic(de.pit);
    dm.histogram = quantile_histogram(de.pit, n_bins);
  }
  finalize_aggregates(rep);
  return rep;
}

std::vector<Trace> dataset_traces(const TransitionDataset& ds, int min_len,
                                  int max_traces) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges = ds.episode_ranges();
  std::stable_sort(ranges.begin(), ranges.end(),
                   [](const auto& a, const auto& b) {
                     return (a.second - a.first) > (b.second - b.first);
                   });
  std::vector<Trace> out;
  for (const auto& [b, e] : ranges) {
    const auto len = e - b;
    if (len < static_cast<std::size_t>(min_len)) continue;
    Trace tr;
    tr.states.resize(static_cast<Eigen::Index>(len) + 1, ds.s.cols());
    tr.actions.resize(static_cast<Eigen::Index>(len), ds.a.cols());
    tr.rewards.resize(static_cast<Eigen::Index>(len));
    for (std::size_t t = 0; t < len; ++t) {
      tr.states.row(static_cast<Eigen::Index>(t)) = ds.s.row(b + t);
      tr.actions.row(static_cast<Eigen::Index>(t)) = ds.a.row(b + t);
      tr.rewards(static_cast<Eigen::Index>(t)) = ds.r(static_cast<Eigen::Index>(b + t));
    }
    tr.states.row(static_cast<Eigen::Index>(len)) = ds.s_next.row(e - 1);
    out.push_back(std::move(tr));
    if (max_traces > 0 && static_cast<int>(out.size()) >= max_traces) break;
  }
  return out;
}

void add_long_horizon(MetricReport& report, const DynamicsModel& model,
                      const std::vector<Trace>& traces,
                      const LongHorizonConfig& cfg) {
  if (cfg.l_max < 1 || cfg.n < 2)
    throw std::invalid_argument("long horizon: l_max >= 1 and n >= 2 required");
  const int d_s = model.state_dim();
  const int dims = d_s + 1;
  if (report.dims.empty()) report.dims.resize(static_cast<std::size_t>(dims));

  // Pooled per (dim, L): point predictions (sample means), ground truths,
  // and order-statistic quantiles.
  std::vector<std::vector<std::vector<double>>> preds(
      dims, std::vector<std::vector<double>>(cfg.l_max));
  auto truths = preds, quants = preds;

  Rng rng(derive_seed(cfg.seed, "metrics.long_horizon"));
  long long total_starts = 0;

  for (const Trace& trace : traces) {
    const auto t_len = static_cast<int>(trace.length());
    if (t_len < cfg.l_max)
      throw std::invalid_argument("long horizon: trace shorter than l_max");
    const int max_start = t_len - cfg.l_max;

    // Evenly spaced start offsets (all of them when few are available).
    std::vector<int> starts;
    const int wanted = std::min(cfg.starts_per_trace, max_start + 1);
    for (int k = 0; k < wanted; ++k) {
      const int pos =
          wanted == 1 ? 0
                      : static_cast<int>(std::llround(
                            static_cast<double>(k) * max_start / (wanted - 1)));
      if (starts.empty() || starts.back() != pos) starts.push_back(pos);
    }
    const auto m = static_cast<Eigen::Index>(starts.size());
    total_starts += m;

    const Eigen::Index rows = m * cfg.n;
    Eigen::MatrixXd cur(rows, d_s);
    for (Eigen::Index si = 0; si < m; ++si)
      for (int k = 0; k < cfg.n; ++k)
        cur.row(si * cfg.n + k) = trace.states.row(starts[si]);

    Eigen::MatrixXd act(rows, trace.actions.cols());
    Eigen::MatrixXd next;
    Eigen::VectorXd rew;
    for (int depth = 1; depth <= cfg.l_max; ++depth) {
      for (Eigen::Index si = 0; si < m; ++si)
        act.middleRows(si * cfg.n, cfg.n).rowwise() =
            trace.actions.row(starts[si] + depth - 1);
      model.sample_batch(cur, act, rng, next, rew);
      cur = next;

      for (Eigen::Index si = 0; si < m; ++si) {
        for (int j = 0; j < dims; ++j) {
          const double truth = j < d_s
                                   ? trace.states(starts[si] + depth, j)
                                   : trace.rewards(starts[si] + depth - 1);
          double mean = 0.0;
          int count_le = 0;
          for (int k = 0; k < cfg.n; ++k) {
            const double v = j < d_s ? cur(si * cfg.n + k, j)
                                     : rew(si * cfg.n + k);
            mean += v;
            if (v <= truth) ++count_le;
          }
          mean /= cfg.n;
          preds[j][depth - 1].push_back(mean);
          truths[j][depth - 1].push_back(truth);
          quants[j][depth - 1].push_back(static_cast<double>(count_le) / cfg.n);
        }
      }
    }
  }
  if (total_starts == 0)
    throw std::invalid_argument("long horizon: no usable traces");

  report.l_max = cfg.l_max;
  report.n_population = cfg.n;
  report.n_starts = total_starts;
  for (int j = 0; j < dims; ++j) {
    DimMetrics& dm = report.dims[static_cast<std::size_t>(j)];
    dm.r2_long.resize(cfg.l_max);
    dm.r2_long_defined.resize(cfg.l_max);
    dm.ks_long.resize(cfg.l_max);
    for (int l = 0; l < cfg.l_max; ++l) {
      const auto& p = preds[j][l];
      const auto& t = truths[j][l];
      const Eigen::Map<const Eigen::VectorXd> pv(p.data(),
                                                 static_cast<Eigen::Index>(p.size()));
      const Eigen::Map<const Eigen::VectorXd> tv(t.data(),
                                                 static_cast<Eigen::Index>(t.size()));
      bool defined = true;
      dm.r2_long[l] = r2(pv, tv, &defined);
      dm.r2_long_defined[l] = defined ? 1 : 0;
      dm.ks_long[l] = ks_statistic(quants[j][l]);
    }
  }
  finalize_aggregates(report);
}

void finalize_aggregates(MetricReport& rep) {
  const auto dims = rep.dims.size();
  if (dims == 0) return;
  double r2_acc = 0.0, ll_acc = 0.0, lr_acc = 0.0, or_acc = 0.0, ks_acc = 0.0;
  int r2_n = 0;
  for (const DimMetrics& dm : rep.dims) {
    if (dm.r2_defined) {
      r2_acc += dm.r2;
      ++r2_n;
    }
    ll_acc += dm.log_lik;
    lr_acc += dm.lr;
    or_acc += dm.or_rate;
    ks_acc += dm.ks;
  }
  rep.agg_r2_defined = r2_n > 0;
  rep.agg_r2 = r2_n > 0 ? r2_acc / r2_n : 0.0;
  rep.agg_log_lik = ll_acc / static_cast<double>(dims);
  rep.agg_lr = lr_acc / static_cast<double>(dims);
  rep.agg_or = or_acc / static_cast<double>(dims);
  rep.agg_ks = ks_acc / static_cast<double>(dims);

  rep.agg_r2_long.clear();
  rep.agg_ks_long.clear();
  if (rep.l_max > 0 && !rep.dims.front().r2_long.empty()) {
    rep.agg_r2_long.resize(rep.l_max, 0.0);
    rep.agg_ks_long.resize(rep.l_max, 0.0);
    for (int l = 0; l < rep.l_max; ++l) {
      double racc = 0.0, kacc = 0.0;
      int rn = 0;
      for (const DimMetrics& dm : rep.dims) {
        if (dm.r2_long_defined[l] != 0) {
          racc += dm.r2_long[l];
          ++rn;
        }
        kacc += dm.ks_long[l];
      }
      rep.agg_r2_long[l] = rn > 0 ? racc / rn : 0.0;
      rep.agg_ks_long[l] = kacc / static_cast<double>(rep.dims.size());
    }
  }
}

}  // namespace mbrl
