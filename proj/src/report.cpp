#include "mlb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mlb/error.hpp"

namespace mlb {

namespace {

const char* const kColumns[] = {"metric", "q05",       "q50",       "q95",       "avg",
                                "stderr", "ratio_q05", "ratio_q50", "ratio_q95", "ratio_avg"};

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse(const std::string& cell) {
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw IoError("report: bad number '" + cell + "'");
  }
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw PreconditionError("quantile of an empty list");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw PreconditionError("summary of an empty list");
  Summary s;
  s.count = static_cast<int>(values.size());
  s.q05 = quantile(values, 0.05);
  s.q50 = quantile(values, 0.50);
  s.q95 = quantile(values, 0.95);
  const double n = static_cast<double>(values.size());
  s.avg = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.avg) * (v - s.avg);
    s.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    if (r.metric.find(',') != std::string::npos) throw PreconditionError("metric names cannot contain commas");
    out << r.metric << ',' << format17(r.value.q05) << ',' << format17(r.value.q50) << ','
        << format17(r.value.q95) << ',' << format17(r.value.avg) << ',' << format17(r.value.stderr_);
    if (r.ratio) {
      out << ',' << format17(r.ratio->q05) << ',' << format17(r.ratio->q50) << ',' << format17(r.ratio->q95)
          << ',' << format17(r.ratio->avg);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("report: missing header");
  const auto header = split(line);
  if (header.size() != std::size(kColumns) || !std::equal(header.begin(), header.end(), std::begin(kColumns))) {
    throw IoError("report: unexpected header '" + line + "'");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != std::size(kColumns)) throw IoError("report: wrong number of cells in '" + line + "'");
    ReportRow r;
    r.metric = c[0];
    r.value.q05 = parse(c[1]);
    r.value.q50 = parse(c[2]);
    r.value.q95 = parse(c[3]);
    r.value.avg = parse(c[4]);
    r.value.stderr_ = parse(c[5]);
    if (!c[6].empty()) {
      Summary s;
      s.q05 = parse(c[6]);
      s.q50 = parse(c[7]);
      s.q95 = parse(c[8]);
      s.avg = parse(c[9]);
      r.ratio = s;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.metric.size());
  std::ostringstream out;
  char buf[64];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, " %12.4g", v);
    out << buf;
  };
  out << kColumns[0] << std::string(width - 6, ' ');
  for (std::size_t i = 1; i < std::size(kColumns); ++i) {
    std::snprintf(buf, sizeof buf, " %12s", kColumns[i]);
    out << buf;
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.metric << std::string(width - r.metric.size(), ' ');
    cell(r.value.q05);
    cell(r.value.q50);
    cell(r.value.q95);
    cell(r.value.avg);
    cell(r.value.stderr_);
    if (r.ratio) {
      cell(r.ratio->q05);
      cell(r.ratio->q50);
      cell(r.ratio->q95);
      cell(r.ratio->avg);
    } else {
      for (int i = 0; i < 4; ++i) out << "            -";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mlb
