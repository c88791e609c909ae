#include "mbrl/report.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

namespace {
std::string dim_name(int j, int d_s) {
  return j < d_s ? "s" + std::to_string(j) : "r";
}

json dim_to_json(const DimMetrics& d) {
  json out;
  out["r2"] = d.r2;
  out["r2_defined"] = d.r2_defined;
  out["log_lik"] = d.log_lik;
  out["log_lik_defined"] = d.log_lik_defined;
  out["lr"] = d.lr;
  out["lr_defined"] = d.lr_defined;
  out["baseline_floored"] = d.baseline_floored;
  out["or_rate"] = d.or_rate;
  out["ks"] = d.ks;
  out["histogram"] = d.histogram;
  out["r2_long"] = d.r2_long;
  out["r2_long_defined"] = d.r2_long_defined;
  out["ks_long"] = d.ks_long;
  return out;
}

DimMetrics dim_from_json(const json& in) {
  DimMetrics d;
  d.r2 = in.at("r2").get<double>();
  d.r2_defined = in.at("r2_defined").get<bool>();
  d.log_lik = in.at("log_lik").get<double>();
  d.log_lik_defined = in.at("log_lik_defined").get<bool>();
  d.lr = in.at("lr").get<double>();
  d.lr_defined = in.at("lr_defined").get<bool>();
  d.baseline_floored = in.at("baseline_floored").get<bool>();
  d.or_rate = in.at("or_rate").get<double>();
  d.ks = in.at("ks").get<double>();
  d.histogram = in.at("histogram").get<std::vector<long long>>();
  d.r2_long = in.at("r2_long").get<std::vector<double>>();
  d.r2_long_defined =
      in.at("r2_long_defined").get<std::vector<std::uint8_t>>();
  d.ks_long = in.at("ks_long").get<std::vector<double>>();
  return d;
}
}  // namespace

std::string report_to_json(const MetricReport& report) {
  json out;
  out["format_version"] = 1;
  out["model_id"] = report.model_id;
  out["dataset_id"] = report.dataset_id;
  out["n_points"] = report.n_points;
  out["n_bins"] = report.n_bins;
  out["l_max"] = report.l_max;
  out["n_population"] = report.n_population;
  out["n_starts"] = report.n_starts;
  json dims = json::array();
  for (const auto& d : report.dims) dims.push_back(dim_to_json(d));
  out["dims"] = std::move(dims);
  json agg;
  agg["r2"] = report.agg_r2;
  agg["r2_defined"] = report.agg_r2_defined;
  agg["log_lik"] = report.agg_log_lik;
  agg["lr"] = report.agg_lr;
  agg["or_rate"] = report.agg_or;
  agg["ks"] = report.agg_ks;
  agg["r2_long"] = report.agg_r2_long;
  agg["ks_long"] = report.agg_ks_long;
  out["aggregate"] = std::move(agg);
  return out.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  const json in = json::parse(text);
  if (in.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported report version");
  MetricReport rep;
  rep.model_id = in.at("model_id").get<std::string>();
  rep.dataset_id = in.at("dataset_id").get<std::string>();
  rep.n_points = in.at("n_points").get<long long>();
  rep.n_bins = in.at("n_bins").get<int>();
  rep.l_max = in.at("l_max").get<int>();
  rep.n_population = in.at("n_population").get<int>();
  rep.n_starts = in.at("n_starts").get<long long>();
  for (const auto& d : in.at("dims")) rep.dims.push_back(dim_from_json(d));
  const json& agg = in.at("aggregate");
  rep.agg_r2 = agg.at("r2").get<double>();
  rep.agg_r2_defined = agg.at("r2_defined").get<bool>();
  rep.agg_log_lik = agg.at("log_lik").get<double>();
  rep.agg_lr = agg.at("lr").get<double>();
  rep.agg_or = agg.at("or_rate").get<double>();
  rep.agg_ks = agg.at("ks").get<double>();
  rep.agg_r2_long = agg.at("r2_long").get<std::vector<double>>();
  rep.agg_ks_long = agg.at("ks_long").get<std::vector<double>>();
  return rep;
}

void save_report(const MetricReport& report, const std::string& path) {
  io::write_text_file(path, report_to_json(report));
}

MetricReport load_report(const std::string& path) {
  return report_from_json(io::read_text_file(path));
}

std::string long_horizon_csv(const MetricReport& report) {
  const int d_s = static_cast<int>(report.dims.size()) - 1;
  std::ostringstream os;
  os.precision(17);
  os << "L,agg_r2,agg_ks";
  for (int j = 0; j < static_cast<int>(report.dims.size()); ++j)
    os << ",r2_" << dim_name(j, d_s) << ",ks_" << dim_name(j, d_s);
  os << "\n";
  for (int l = 1; l <= report.l_max; ++l) {
    os << l << "," << report.agg_r2_long[l - 1] << ","
       << report.agg_ks_long[l - 1];
    for (const auto& d : report.dims)
      os << "," << d.r2_long[l - 1] << "," << d.ks_long[l - 1];
    os << "\n";
  }
  return os.str();
}

std::string histogram_csv(const MetricReport& report) {
  const int d_s = static_cast<int>(report.dims.size()) - 1;
  std::ostringstream os;
  os.precision(17);
  os << "dim,bin,lo,hi,count\n";
  for (int j = 0; j < static_cast<int>(report.dims.size()); ++j) {
    const auto& h = report.dims[j].histogram;
    const double width = 1.0 / static_cast<double>(h.size());
    for (std::size_t b = 0; b < h.size(); ++b)
      os << dim_name(j, d_s) << "," << b << "," << b * width << ","
         << (b + 1) * width << "," << h[b] << "\n";
  }
  return os.str();
}

std::string curve_csv(const std::vector<EvalPoint>& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "update,mean_return,std_return\n";
  for (const auto& p : curve)
    os << p.update << "," << p.mean_return << "," << p.std_return << "\n";
  return os.str();
}

std::string curve_to_json(const std::vector<EvalPoint>& curve) {
  json rows = json::array();
  for (const auto& p : curve)
    rows.push_back({{"update", p.update},
                    {"mean_return", p.mean_return},
                    {"std_return", p.std_return}});
  return rows.dump(2) + "\n";
}

std::vector<EvalPoint> curve_from_json(const std::string& text) {
  std::vector<EvalPoint> curve;
  for (const auto& row : json::parse(text))
    curve.push_back({row.at("update").get<long long>(),
                     row.at("mean_return").get<double>(),
                     row.at("std_return").get<double>()});
  return curve;
}

}  // namespace mbrl
