#include "iadet/reporting.hpp"

#include <cmath>
#include <cstdio>

#include <fmt/format.h>

#include "format.hpp"
#include "iadet/error.hpp"

namespace iadet {
namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

SummaryRow summary_row(std::string name, std::uint64_t images, double t_assisted,
                       double t_unassisted) {
  if (!(t_unassisted > 0.0)) {
    throw Error(ErrorCode::kUndefinedRatio, "unassisted time must be positive");
  }
  SummaryRow row{std::move(name), images, t_assisted, t_unassisted, 0.0, 0.0};
  row.ratio = t_assisted / t_unassisted;
  row.improvement_percent = (1.0 - row.ratio) * 100.0;
  return row;
}

SummaryTable summarize(std::span<const SummaryRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "summary needs at least one row");
  SummaryTable table;
  table.rows.assign(rows.begin(), rows.end());
  table.mean.name = "Mean";
  for (const SummaryRow& r : rows) {
    table.mean.images += r.images;
    table.mean.t_assisted += r.t_assisted;
    table.mean.t_unassisted += r.t_unassisted;
    table.mean.ratio += r.ratio;
    table.mean.improvement_percent += r.improvement_percent;
  }
  const double n = static_cast<double>(rows.size());
  table.mean.t_assisted /= n;
  table.mean.t_unassisted /= n;
  table.mean.ratio /= n;
  table.mean.improvement_percent /= n;
  return table;
}

SummaryTable summarize(std::span<const RunReport> reports, std::span<const std::string> names) {
  if (!names.empty() && names.size() != reports.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one name per report expected");
  }
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RunReport& r = reports[i];
    rows.push_back(summary_row(names.empty() ? r.name : names[i], r.rows.size(), r.t_assisted,
                               r.t_unassisted));
  }
  return summarize(rows);
}

std::vector<double> box_filter_mean(std::span<const std::vector<double>> curves,
                                    std::size_t window) {
  if (curves.empty()) throw Error(ErrorCode::kInvalidArgument, "no curves to average");
  if (window == 0 || window % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "box filter window must be odd");
  }
  const std::size_t len = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != len) throw Error(ErrorCode::kInvalidArgument, "curves differ in length");
  }
  if (window > len) {
    throw Error(ErrorCode::kWindowTooLarge,
                fmt::format("window {} exceeds series length {}", window, len));
  }
  std::vector<double> mean(len, 0.0);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < len; ++i) mean[i] += c[i];
  }
  for (double& v : mean) v /= static_cast<double>(curves.size());

  const std::size_t half = window / 2;
  std::vector<double> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(len - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += mean[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

AbRow ab_row(std::string name, double a, double n, double b) {
  for (double v : {a, n, b}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "AP values must lie in [0, 1]");
    }
  }
  AbRow row{std::move(name), a, n, b, std::nullopt};
  if (n > 0.0) row.a_over_n_percent = 100.0 * a / n;
  return row;
}

AbTable ab_table(std::span<const AbRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "table needs at least one row");
  AbTable table;
  table.mean.name = "Mean";
  double pct = 0.0;
  std::size_t defined = 0;
  for (const AbRow& r : rows) {
    AbRow checked = ab_row(r.name, r.a, r.n, r.b);
    table.mean.a += checked.a;
    table.mean.n += checked.n;
    table.mean.b += checked.b;
    if (checked.a_over_n_percent) {
      pct += *checked.a_over_n_percent;
      ++defined;
    }
    table.rows.push_back(std::move(checked));
  }
  const double count = static_cast<double>(rows.size());
  table.mean.a /= count;
  table.mean.n /= count;
  table.mean.b /= count;
  if (defined > 0) table.mean.a_over_n_percent = pct / static_cast<double>(defined);
  return table;
}

std::string format_ratio(double value) {
  if (!std::isfinite(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%#.3g", value);
  std::string s = buf;
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string format_percent(double value) {
  if (!std::isfinite(value)) return "nan";
  const double tenths = std::trunc(value * 10.0 + std::copysign(1e-9, value));
  const double cut = tenths / 10.0;
  return fmt::format("{:.1f}", cut == 0.0 ? 0.0 : cut);
}

std::string format_seconds(double value) {
  if (!std::isfinite(value)) return "nan";
  return fmt::format("{:.0f}", value);
}

std::string summary_csv(const SummaryTable& table) {
  std::string out = "name,images,t_A,t_N,ratio,improvement_percent\n";
  auto emit = [&](const SummaryRow& r) {
    out += csv_field(r.name) + ',' + std::to_string(r.images) + ',' +
           detail::format_double(r.t_assisted) + ',' + detail::format_double(r.t_unassisted) +
           ',' + detail::format_double(r.ratio) + ',' +
           detail::format_double(r.improvement_percent) + '\n';
  };
  for (const SummaryRow& r : table.rows) emit(r);
  emit(table.mean);
  return out;
}

std::string summary_markdown(const SummaryTable& table) {
  std::string out =
      "| Name | # Images | t_A (s) | t_N (s) | t_A / t_N | % Improvement |\n"
      "|---|---|---|---|---|---|\n";
  for (const SummaryRow& r : table.rows) {
    out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", r.name, r.images,
                       format_seconds(r.t_assisted), format_seconds(r.t_unassisted),
                       format_ratio(r.ratio), format_percent(r.improvement_percent));
  }
  out += fmt::format("| {} | | | | {} | {} |\n", table.mean.name, format_ratio(table.mean.ratio),
                     format_percent(table.mean.improvement_percent));
  return out;
}

std::string ab_csv(const AbTable& table) {
  std::string out = "name,A,N,B,A_over_N_percent\n";
  auto emit = [&](const AbRow& r) {
    out += csv_field(r.name) + ',' + detail::format_double(r.a) + ',' +
           detail::format_double(r.n) + ',' + detail::format_double(r.b) + ',' +
           (r.a_over_n_percent ? detail::format_double(*r.a_over_n_percent) : "undefined") + '\n';
  };
  for (const AbRow& r : table.rows) emit(r);
  emit(table.mean);
  return out;
}

std::string ab_markdown(const AbTable& table) {
  std::string out = "| Name | A | N | B | A/N (%) |\n|---|---|---|---|---|\n";
  auto emit = [&](const AbRow& r) {
    out += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} | {} |\n", r.name, r.a, r.n, r.b,
                       r.a_over_n_percent ? format_percent(*r.a_over_n_percent) : "undefined");
  };
  for (const AbRow& r : table.rows) emit(r);
  emit(table.mean);
  return out;
}

std::string curve_csv(std::span<const double> t, std::span<const double> values) {
  if (t.size() != values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "curve time and value lengths differ");
  }
  std::string out = "t,value\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += detail::format_double(t[i]) + ',' + detail::format_double(values[i]) + '\n';
  }
  return out;
}

}  // namespace iadet
