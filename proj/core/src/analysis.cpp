#include "mbrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mbrl {

using nlohmann::json;

double pearson(const std::vector<double>& xs, const std::vector<double>& ys,
               bool* defined) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson: need equal lengths >= 2");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (!defined) throw std::invalid_argument("pearson: constant input");
    *defined = false;
    return 0.0;
  }
  if (defined) *defined = true;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                bool* defined) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("spearman: need equal lengths >= 2");
  return pearson(average_ranks(xs), average_ranks(ys), defined);
}

namespace {
double metric_value(const MetricReport& rep, const std::string& name) {
  auto curve_at = [&rep, &name](const std::vector<double>& curve, int l) {
    if (static_cast<int>(curve.size()) < l)
      throw std::invalid_argument("correlate: report for " + rep.model_id +
                                  " lacks long-horizon depth " +
                                  std::to_string(l) + " needed by " + name);
    return curve[l - 1];
  };
  if (name == "LR") return rep.agg_lr;
  if (name == "-OR") return -rep.agg_or;
  if (name == "R2(1)") return curve_at(rep.agg_r2_long, 1);
  if (name == "-KS(1)") return -curve_at(rep.agg_ks_long, 1);
  if (name == "R2(10)") return curve_at(rep.agg_r2_long, 10);
  if (name == "-KS(10)") return -curve_at(rep.agg_ks_long, 10);
  if (name == "R2(20)") return curve_at(rep.agg_r2_long, 20);
  if (name == "-KS(20)") return -curve_at(rep.agg_ks_long, 20);
  throw std::logic_error("unknown metric " + name);
}
}  // namespace

CorrelationTable correlate_study(const std::vector<ExperimentRecord>& records) {
  CorrelationTable table;
  table.metrics = {"LR",     "-OR",     "R2(1)",  "-KS(1)",
                   "R2(10)", "-KS(10)", "R2(20)", "-KS(20)"};

  std::map<std::string, std::vector<const ExperimentRecord*>> by_regime;
  for (const auto& rec : records) by_regime[rec.regime].push_back(&rec);

  for (const auto& [regime, recs] : by_regime) {
    if (recs.size() < 3)
      throw std::invalid_argument("correlate: regime " + regime +
                                  " has fewer than 3 records");
    std::vector<double> scores;
    scores.reserve(recs.size());
    for (const auto* r : recs) scores.push_back(r->normalized_score);

    for (const std::string& metric : table.metrics) {
      std::vector<double> values;
      values.reserve(recs.size());
      for (const auto* r : recs)
        values.push_back(metric_value(r->report, metric));
      CorrelationCell cell;
      cell.regime = regime;
      cell.metric = metric;
      cell.spearman = spearman(values, scores, &cell.spearman_defined);
      cell.pearson = pearson(values, scores, &cell.pearson_defined);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

GaussianCi gaussian_ci90(const std::vector<double>& xs) {
  if (xs.size() < 2)
    throw std::invalid_argument("gaussian_ci90: need >= 2 values");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  constexpr double kZ90 = 1.6448536269514722;  // Phi^{-1}(0.95)
  return {mean, kZ90 * sd / std::sqrt(n), static_cast<int>(xs.size())};
}

std::string correlation_csv(const CorrelationTable& table) {
  std::ostringstream os;
  os.precision(17);
  os << "regime,metric,spearman,pearson\n";
  for (const auto& c : table.cells) {
    os << c.regime << "," << c.metric << ",";
    if (c.spearman_defined) os << c.spearman;
    else os << "nan";
    os << ",";
    if (c.pearson_defined) os << c.pearson;
    else os << "nan";
    os << "\n";
  }
  return os.str();
}

std::string correlation_json(const CorrelationTable& table) {
  json rows = json::array();
  for (const auto& c : table.cells) {
    json row;
    row["regime"] = c.regime;
    row["metric"] = c.metric;
    if (c.spearman_defined) row["spearman"] = c.spearman;
    else row["spearman"] = nullptr;
    if (c.pearson_defined) row["pearson"] = c.pearson;
    else row["pearson"] = nullptr;
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

}  // namespace mbrl
