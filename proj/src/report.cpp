// SPDX-License-Identifier: Apache-2.0
#include "iknet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "iknet/error.hpp"

namespace iknet {

namespace {

constexpr const char* kPalette[] = {"#222222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(w / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
         "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::vector<Date>& dates,
                           const std::vector<LineSeries>& series) {
  if (dates.size() < 2) throw ValidationError("line chart needs at least 2 points");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    if (s.values.size() != dates.size()) throw DimensionError("line chart series '" + s.name + "' has wrong length");
    for (double v : s.values) {
      if (!std::isfinite(v)) throw NumericError("line chart series '" + s.name + "' has a non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double W = 900, H = 420, L = 70, R = 160, T = 30, B = 40;
  const double pw = W - L - R, ph = H - T - B;
  auto x = [&](std::size_t i) { return L + pw * static_cast<double>(i) / static_cast<double>(dates.size() - 1); };
  auto y = [&](double v) { return T + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::string svg = header(W, H, title);
  svg += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg += "<text x=\"" + num(L - 6) + "\" y=\"" + num(y(v) + 4) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
  }
  for (std::size_t i : {std::size_t{0}, dates.size() / 2, dates.size() - 1}) {
    svg += "<text x=\"" + num(x(i)) + "\" y=\"" + num(H - B + 16) + "\" text-anchor=\"middle\">" +
           format_date(dates[i]) + "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < dates.size(); ++i) {
      points += (i ? " " : "") + num(x(i)) + "," + num(y(series[s].values[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" + (s == 0 ? "1.6" : "1.1") +
           "\" points=\"" + points + "\"/>\n";
    const double ly = T + 14.0 * static_cast<double>(s) + 6;
    svg += "<line x1=\"" + num(W - R + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(W - R + 32) + "\" y2=\"" +
           num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(W - R + 38) + "\" y=\"" + num(ly + 4) + "\">" + escape(series[s].name) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  if (labels.size() != values.size()) throw DimensionError("bar chart labels and values differ in length");
  if (labels.empty()) throw ValidationError("bar chart needs at least one bar");
  double hi = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("bar chart values are not finite");
    hi = std::max(hi, std::abs(v));
  }
  if (hi == 0.0) hi = 1.0;
  const double W = 640, L = 170, R = 90, T = 30, bar = 18, gap = 6;
  const double H = T + static_cast<double>(labels.size()) * (bar + gap) + 20;
  const double pw = W - L - R;
  std::string svg = header(W, H, title);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double top = T + static_cast<double>(i) * (bar + gap);
    const double len = pw * std::abs(values[i]) / hi;
    svg += "<text x=\"" + num(L - 6) + "\" y=\"" + num(top + bar - 5) + "\" text-anchor=\"end\">" + escape(labels[i]) +
           "</text>\n";
    svg += "<rect x=\"" + num(L) + "\" y=\"" + num(top) + "\" width=\"" + num(len) + "\" height=\"" + num(bar) +
           "\" fill=\"" + (values[i] < 0 ? "#1f77b4" : "#d62728") + "\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", values[i]);
    svg += "<text x=\"" + num(L + len + 4) + "\" y=\"" + num(top + bar - 5) + "\">" + buf + "</text>\n";
  }
  return svg + "</svg>\n";
}

}  // namespace iknet
