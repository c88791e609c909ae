#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbrl/metrics.hpp"

namespace mbrl {

// Pearson correlation. Constant input is undefined: flagged through
// `defined` when given, thrown otherwise.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys,
               bool* defined = nullptr);

// Spearman rank correlation: Pearson over average ranks (ties averaged).
double spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                bool* defined = nullptr);

// Average 1-based ranks, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& xs);

// One static-evaluation + dynamic-evaluation outcome of a model on a
// regime. The report must carry long-horizon curves up to L = 20.
struct ExperimentRecord {
  std::string model_id;
  std::string regime;
  MetricReport report;
  double normalized_score = 0.0;
  std::vector<std::uint64_t> seeds;
};

struct CorrelationCell {
  std::string regime;
  std::string metric;
  double spearman = 0.0;
  bool spearman_defined = true;
  double pearson = 0.0;
  bool pearson_defined = true;
};

struct CorrelationTable {
  std::vector<std::string> metrics;  // row order within each regime
  std::vector<CorrelationCell> cells;
};

// Static metrics correlated against the normalized score, per regime, for
// {LR, -OR, R2(1), -KS(1), R2(10), -KS(10), R2(20), -KS(20)} (negated where
// smaller is better, so larger is always better). Needs >= 3 records per
// regime.
CorrelationTable correlate_study(const std::vector<ExperimentRecord>& records);

std::string correlation_csv(const CorrelationTable& table);
std::string correlation_json(const CorrelationTable& table);

// Two-sided 90% Gaussian confidence interval of the mean:
// half_width = 1.6448536269514722 * sample_std / sqrt(n) (n >= 2).
struct GaussianCi {
  double mean = 0.0;
  double half_width = 0.0;
  int n = 0;
};
GaussianCi gaussian_ci90(const std::vector<double>& xs);

}  // namespace mbrl
