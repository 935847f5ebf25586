// SPDX-License-Identifier: Apache-2.0
#include "iknet/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

std::string to_string(BacktestMode mode) { return mode == BacktestMode::standard ? "standard" : "literal"; }

BacktestMode parse_backtest_mode(std::string_view name) {
  if (name == "standard") return BacktestMode::standard;
  if (name == "literal") return BacktestMode::literal;
  throw ValidationError("backtest mode must be standard or literal, got '" + std::string(name) + "'");
}

void StrategyConfig::validate() const {
  if (!(cost >= 0.0 && cost < 1.0)) throw ValidationError("transaction cost must be in [0, 1)");
}

void PricePath::validate() const {
  if (dates.size() != closes.size()) throw ValidationError("price path has ragged columns");
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i > 0 && !(dates[i - 1] < dates[i])) throw ValidationError("price path dates not strictly increasing");
    if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
      throw ValidationError("price path has a non-positive close on " + format_date(dates[i]));
    }
  }
}

PricePath price_path(const OhlcvSeries& series) { return {series.dates(), series.closes()}; }

std::vector<double> TradeLedger::net_returns() const {
  std::vector<double> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.net);
  return out;
}

namespace {

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

TradeLedger simulate(const ForecastSeries& forecasts, const PricePath& prices, const StrategyConfig& config) {
  config.validate();
  prices.validate();
  validate_series(forecasts);
  TradeLedger ledger;
  ledger.mode = config.mode;
  ledger.cost_rate = config.cost;
  const double leg_cost = std::log1p(-config.cost);
  bool was_long = false;
  std::size_t prev_index = 0;
  for (std::size_t k = 0; k < forecasts.size(); ++k) {
    const Date date = forecasts.dates[k];
    const auto it = std::lower_bound(prices.dates.begin(), prices.dates.end(), date);
    if (it == prices.dates.end() || *it != date) {
      throw ValidationError("backtest: forecast date " + format_date(date) + " is not a trading day of the price path");
    }
    const auto index = static_cast<std::size_t>(it - prices.dates.begin());
    if (index == 0) throw ValidationError("backtest: no previous close for " + format_date(date));
    if (k > 0 && index != prev_index + 1) {
      throw ValidationError("backtest: forecasts skip trading days before " + format_date(date));
    }
    prev_index = index;
    LedgerDay day;
    day.date = date;
    day.forecast = forecasts.forecast[k];
    day.reference = prices.closes[index - 1];
    day.close = prices.closes[index];
    if (std::abs(forecasts.actual[k] - day.close) > 1e-9 * std::abs(day.close)) {
      throw ValidationError("backtest: actual on " + format_date(date) + " differs from the price path close");
    }
    day.long_position = day.forecast > day.reference;
    if (day.long_position) {
      day.gross = std::log(day.close / day.reference);
      if (config.mode == BacktestMode::literal &&
          sign(day.forecast - day.reference) != sign(day.close - day.reference)) {
        day.gross = 0.0;
      }
    }
    if (day.long_position && !was_long) {
      day.cost += leg_cost;
      ++ledger.entries;
    } else if (!day.long_position && was_long) {
      day.cost += leg_cost;
      ++ledger.exits;
    }
    was_long = day.long_position;
    ledger.days.push_back(day);
  }
  if (was_long) {
    ledger.days.back().cost += leg_cost;
    ++ledger.exits;
  }
  double total = 0.0;
  for (auto& d : ledger.days) {
    d.net = d.gross + d.cost;
    total += d.net;
    d.cumulative_percent = std::expm1(total) * 100.0;
  }
  ledger.total_log_return = total;
  ledger.cumulative_percent = std::expm1(total) * 100.0;
  return ledger;
}

SharpeResult sharpe(const std::vector<double>& r) {
  if (r.size() < 2) throw ValidationError("Sharpe ratio needs at least 2 returns");
  if (std::all_of(r.begin(), r.end(), [&](double v) { return v == r[0]; })) return {0.0, false};
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return {0.0, false};
  return {mean / sd * std::sqrt(252.0), true};
}

SharpeResult sharpe(const TradeLedger& ledger) { return sharpe(ledger.net_returns()); }

double historical_volatility(const std::vector<double>& closes) {
  if (closes.size() < 3) throw ValidationError("historical volatility needs at least 3 prices");
  std::vector<double> r;
  for (std::size_t i = 1; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !(closes[i - 1] > 0.0)) throw ValidationError("historical volatility: non-positive price");
    r.push_back(std::log(closes[i] / closes[i - 1]));
  }
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0)) * std::sqrt(252.0) * 100.0;
}

std::vector<double> traded_closes(const TradeLedger& ledger) {
  std::vector<double> out;
  if (ledger.days.empty()) return out;
  out.push_back(ledger.days.front().reference);
  for (const auto& d : ledger.days) out.push_back(d.close);
  return out;
}

std::string ledger_csv(const TradeLedger& ledger) {
  std::string out = "date,position,forecast,reference,close,R_t,cost,net,cumulative_percent\n";
  for (const auto& d : ledger.days) {
    out += format_date(d.date) + "," + (d.long_position ? "long" : "flat") + "," + format_double(d.forecast) + "," +
           format_double(d.reference) + "," + format_double(d.close) + "," + format_double(d.gross) + "," +
           format_double(d.cost) + "," + format_double(d.net) + "," + format_double(d.cumulative_percent) + "\n";
  }
  return out;
}

std::string backtest_summary_json(const TradeLedger& ledger) {
  nlohmann::json j;
  j["format"] = "iknet.backtest/1";
  j["mode"] = to_string(ledger.mode);
  j["cost"] = ledger.cost_rate;
  j["days"] = ledger.days.size();
  j["entries"] = ledger.entries;
  j["exits"] = ledger.exits;
  j["cumulative_return_percent"] = ledger.cumulative_percent;
  if (!ledger.days.empty()) {
    j["start"] = format_date(ledger.days.front().date);
    j["end"] = format_date(ledger.days.back().date);
  }
  if (ledger.days.size() >= 2) {
    const SharpeResult s = sharpe(ledger);
    j["sharpe_defined"] = s.defined;
    j["sharpe"] = s.defined ? nlohmann::json(s.value) : nlohmann::json(nullptr);
    const auto closes = traded_closes(ledger);
    j["hv_percent"] = historical_volatility(closes);
    j["buy_and_hold_percent"] = (closes.back() / closes.front() - 1.0) * 100.0;
  }
  return j.dump(2);
}

}  // namespace iknet
