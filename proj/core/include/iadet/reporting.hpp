#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iadet/simulator.hpp"

namespace iadet {

inline constexpr std::size_t kDefaultBoxFilterWindow = 9;

struct SummaryRow {
  std::string name;
  std::uint64_t images = 0;
  double t_assisted = 0.0;
  double t_unassisted = 0.0;
  double ratio = 0.0;
  double improvement_percent = 0.0;
};

/// The mean row averages every column without weights; its image count is the
/// total.
struct SummaryTable {
  std::vector<SummaryRow> rows;
  SummaryRow mean;
};

SummaryRow summary_row(std::string name, std::uint64_t images, double t_assisted,
                       double t_unassisted);

SummaryTable summarize(std::span<const SummaryRow> rows);

/// Names default to each report's own name when `names` is empty.
SummaryTable summarize(std::span<const RunReport> reports,
                       std::span<const std::string> names = {});

/// Pointwise mean of equally sampled curves, smoothed by a centered moving
/// average. Windows are truncated at the edges.
std::vector<double> box_filter_mean(std::span<const std::vector<double>> curves,
                                    std::size_t window = kDefaultBoxFilterWindow);

struct AbRow {
  std::string name;
  double a = 0.0;
  double n = 0.0;
  double b = 0.0;
  std::optional<double> a_over_n_percent;  // empty when N is zero
};

struct AbTable {
  std::vector<AbRow> rows;
  AbRow mean;  // a_over_n_percent averages the defined rows only
};

AbRow ab_row(std::string name, double a, double n, double b);
AbTable ab_table(std::span<const AbRow> rows);

/// Three significant digits, trailing zeros kept ("0.784", "1.11", "0.630").
std::string format_ratio(double value);

/// One decimal, cut toward zero as the printed tables do ("94.86" -> "94.8").
std::string format_percent(double value);

/// Seconds rounded to whole numbers.
std::string format_seconds(double value);

std::string summary_csv(const SummaryTable& table);
std::string summary_markdown(const SummaryTable& table);
std::string ab_csv(const AbTable& table);
std::string ab_markdown(const AbTable& table);

/// t,value rows; lengths must match.
std::string curve_csv(std::span<const double> t, std::span<const double> values);

}  // namespace iadet
