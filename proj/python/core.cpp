// SPDX-License-Identifier: Apache-2.0
//
// Python bindings: keyword JSONL I/O and validation, indicators, and metrics.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "iknet/error.hpp"
#include "iknet/eval.hpp"
#include "iknet/indicators.hpp"
#include "iknet/keywords.hpp"

namespace py = pybind11;
using namespace iknet;

namespace {

py::dict to_dict(const KeywordSet& set) {
  py::list keywords;
  for (const Keyword& k : set.entries) {
    py::dict d;
    d["word"] = k.word;
    d["saliency"] = k.saliency;
    d["embedding"] = k.embedding;
    keywords.append(d);
  }
  py::dict out;
  out["date"] = format_date(set.date);
  out["articles"] = set.articles;
  out["keywords"] = keywords;
  return out;
}

KeywordSet from_dict(const py::dict& d) {
  KeywordSet set;
  set.date = parse_date(d["date"].cast<std::string>());
  set.articles = d["articles"].cast<int>();
  for (const auto& item : d["keywords"].cast<py::list>()) {
    const auto k = item.cast<py::dict>();
    set.entries.push_back({k["word"].cast<std::string>(), k["saliency"].cast<double>(),
                           k["embedding"].cast<std::vector<double>>()});
  }
  sort_keywords(set.entries);
  return set;
}

ForecastSeries series(const std::vector<double>& forecast, const std::vector<double>& actual) {
  if (forecast.size() != actual.size()) throw DimensionError("forecast and actual differ in length");
  ForecastSeries s;
  s.model = "py";
  const long start = day_number(make_date(2000, 1, 3));
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    s.push_back(from_day_number(start + static_cast<long>(i)), forecast[i], actual[i]);
  }
  validate_series(s);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "IKNet core bindings";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<MissingDataError>(m, "MissingDataError", PyExc_FileNotFoundError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("validate_keywords_jsonl", &validate_keywords_jsonl, py::arg("path"),
        "All schema problems in a keyword JSONL file as 'line N: message' strings.");
  m.def(
      "validate_keyword_record",
      [](const std::string& line, std::optional<std::size_t> dim) { return validate_keyword_record(line, dim); },
      py::arg("line"), py::arg("dim") = py::none(), "Problems in one JSONL record.");
  m.def(
      "read_keywords_jsonl",
      [](const std::filesystem::path& path) {
        const KeywordFile file = read_keywords_jsonl(path);
        py::list days;
        for (const auto& d : file.days) days.append(to_dict(d));
        return days;
      },
      py::arg("path"));
  m.def(
      "write_keywords_jsonl",
      [](const std::filesystem::path& path, const std::vector<py::dict>& days) {
        std::vector<KeywordSet> sets;
        for (const auto& d : days) sets.push_back(from_dict(d));
        write_keywords_jsonl(path, sets);
      },
      py::arg("path"), py::arg("days"));
  m.def(
      "keyword_record", [](const py::dict& d) { return keyword_set_to_jsonl(from_dict(d)); }, py::arg("day"),
      "One JSONL line for a day's keywords, sorted by saliency.");

  m.attr("feature_names") = [] {
    std::vector<std::string> names;
    for (auto n : kFeatureNames) names.emplace_back(n);
    return names;
  }();
  m.def(
      "indicators",
      [](const std::filesystem::path& ohlcv) {
        const IndicatorFrame frame = compute_indicators(read_ohlcv_csv(ohlcv));
        std::vector<std::string> dates;
        std::vector<std::vector<double>> rows;
        for (std::size_t t = 0; t < frame.dates.size(); ++t) {
          dates.push_back(format_date(frame.dates[t]));
          rows.emplace_back(frame.rows[t].begin(), frame.rows[t].end());
        }
        py::dict out;
        out["dates"] = dates;
        out["rows"] = rows;
        out["valid"] = std::vector<bool>(frame.valid.begin(), frame.valid.end());
        return out;
      },
      py::arg("ohlcv_csv"), "Indicator frame of an OHLCV CSV file.");

  m.def(
      "rmse", [](const std::vector<double>& f, const std::vector<double>& y) { return rmse(series(f, y)); },
      py::arg("forecast"), py::arg("actual"));
  m.def(
      "smape", [](const std::vector<double>& f, const std::vector<double>& y) { return smape(series(f, y)); },
      py::arg("forecast"), py::arg("actual"));
  m.def(
      "dm_test",
      [](const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& y,
         const std::string& loss, bool harvey) {
        if (loss != "squared" && loss != "absolute") throw ValidationError("loss must be 'squared' or 'absolute'");
        const DmResult r = dm_test(series(a, y), series(b, y),
                                   loss == "squared" ? LossKind::squared : LossKind::absolute, harvey);
        py::dict out;
        out["statistic"] = r.statistic;
        out["p_value"] = r.p_value;
        out["degenerate"] = r.degenerate;
        out["n"] = r.n;
        return out;
      },
      py::arg("forecast_a"), py::arg("forecast_b"), py::arg("actual"), py::arg("loss") = "squared",
      py::arg("harvey") = false, "Diebold-Mariano test; negative statistics favour forecast_a.");
}
