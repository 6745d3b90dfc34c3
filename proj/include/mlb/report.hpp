#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mlb {

/// Linear interpolation between order statistics: position p * (n - 1).
double quantile(std::vector<double> values, double p);

struct Summary {
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double avg = 0.0;
  /// Sample standard deviation over sqrt(N); 0 for a single value.
  double stderr_ = 0.0;
  int count = 0;
};

/// Throws PreconditionError on an empty list.
Summary summarize(const std::vector<double>& values);

struct ReportRow {
  std::string metric;
  Summary value;
  /// Summary of per-instance ratios against the baseline, in percent.
  std::optional<Summary> ratio;
};

/// Column order: metric, q05, q50, q95, avg, stderr, ratio_q05, ratio_q50,
/// ratio_q95, ratio_avg. Numbers use 17 significant digits; missing ratios
/// are empty cells.
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);

/// Fixed-width table with the same columns.
std::string report_text(const std::vector<ReportRow>& rows);

}  // namespace mlb
