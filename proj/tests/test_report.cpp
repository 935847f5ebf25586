// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iknet/error.hpp"
#include "iknet/report.hpp"

using namespace iknet;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("line chart") {
  const std::vector<Date> dates{make_date(2024, 1, 2), make_date(2024, 1, 3), make_date(2024, 1, 4)};
  const std::string svg = line_chart_svg("A & B", dates, {{"actual", {1, 2, 3}}, {"full", {1.5, 2, 2.5}}});
  CHECK(svg.starts_with("<svg"));
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("A &amp; B") != std::string::npos);
  CHECK(svg.find("2024-01-02") != std::string::npos);
  CHECK(svg == line_chart_svg("A & B", dates, {{"actual", {1, 2, 3}}, {"full", {1.5, 2, 2.5}}}));
  CHECK_THROWS_AS(line_chart_svg("t", dates, {{"x", {1, 2}}}), DimensionError);
  CHECK_THROWS_AS(line_chart_svg("t", dates, {{"x", {1, NAN, 2}}}), NumericError);
  CHECK_THROWS_AS(line_chart_svg("t", {dates[0]}, {{"x", {1}}}), ValidationError);
  // A flat series still renders.
  CHECK_NOTHROW(line_chart_svg("t", dates, {{"x", {2, 2, 2}}}));
}

TEST_CASE("bar chart") {
  const std::string svg = bar_chart_svg("imp", {"kw1", "rsi14", "<pad>"}, {0.5, 0.25, 0.0});
  CHECK(count(svg, "<rect") == 4);  // background + bars
  CHECK(svg.find("&lt;pad&gt;") != std::string::npos);
  CHECK(svg.find("width=\"380.00\"") != std::string::npos);  // longest bar spans the plot
  CHECK_THROWS_AS(bar_chart_svg("t", {"a"}, {1, 2}), DimensionError);
  CHECK_THROWS_AS(bar_chart_svg("t", {}, {}), ValidationError);
}
