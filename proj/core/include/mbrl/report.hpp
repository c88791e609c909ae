#pragma once

#include <string>
#include <vector>

#include "mbrl/metrics.hpp"
#include "mbrl/mopo.hpp"

namespace mbrl {

// MetricReport as one JSON document (schema in the README). Undefined
// metrics are carried as value + defined flag, never NaN, so the text
// round-trips bit-exactly.
std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
void save_report(const MetricReport& report, const std::string& path);
MetricReport load_report(const std::string& path);

// Plot-ready CSV: one row per depth L with aggregate and per-dim curves.
std::string long_horizon_csv(const MetricReport& report);
// One row per (dim, bin) with counts.
std::string histogram_csv(const MetricReport& report);
// One row per evaluation point of a training curve.
std::string curve_csv(const std::vector<EvalPoint>& curve);

std::string curve_to_json(const std::vector<EvalPoint>& curve);
std::vector<EvalPoint> curve_from_json(const std::string& text);

}  // namespace mbrl
