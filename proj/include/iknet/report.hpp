// SPDX-License-Identifier: Apache-2.0
//
// Static SVG charts for run reports.
#pragma once

#include <string>
#include <vector>

#include "iknet/date.hpp"

namespace iknet {

struct LineSeries {
  std::string name;
  std::vector<double> values;  // aligned with the chart's dates
};

/// Time-series line chart; the first series is drawn as the reference line.
std::string line_chart_svg(const std::string& title, const std::vector<Date>& dates,
                           const std::vector<LineSeries>& series);

/// Horizontal bar chart, bars in the given order.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace iknet
