// SPDX-License-Identifier: Apache-2.0
//
// Long/flat trading on next-day forecasts. The position for day k is decided
// at the previous close: long when the forecast exceeds that close. Returns
// are daily log returns; each entry and each exit adds ln(1 - c). A position
// still open after the last day is liquidated on that day.
#pragma once

#include <string>
#include <vector>

#include "iknet/eval.hpp"
#include "iknet/indicators.hpp"

namespace iknet {

enum class BacktestMode {
  standard,
  /// Additionally zeroes a long day's return whenever the predicted direction
  /// disagrees with the realised one.
  literal,
};

std::string to_string(BacktestMode mode);
BacktestMode parse_backtest_mode(std::string_view name);

struct StrategyConfig {
  double cost = 0.003;
  BacktestMode mode = BacktestMode::standard;
  void validate() const;
};

struct PricePath {
  std::vector<Date> dates;
  std::vector<double> closes;
  void validate() const;
};

PricePath price_path(const OhlcvSeries& series);

struct LedgerDay {
  Date date;
  bool long_position = false;
  double forecast = 0.0;
  double reference = 0.0;  // previous close
  double close = 0.0;
  double gross = 0.0;      // R_t while long, else 0
  double cost = 0.0;       // sum of ln(1 - c) terms charged today
  double net = 0.0;
  double cumulative_percent = 0.0;
};

struct TradeLedger {
  BacktestMode mode = BacktestMode::standard;
  double cost_rate = 0.0;
  std::vector<LedgerDay> days;
  std::size_t entries = 0;
  std::size_t exits = 0;
  double total_log_return = 0.0;
  double cumulative_percent = 0.0;  // (exp(sum net) - 1) * 100

  std::vector<double> net_returns() const;
};

/// Throws ValidationError when forecast dates are not consecutive trading
/// days of `prices` (after its first day) or actuals disagree with the closes.
TradeLedger simulate(const ForecastSeries& forecasts, const PricePath& prices, const StrategyConfig& config);

struct SharpeResult {
  double value = 0.0;
  bool defined = false;  // false when the return std is 0
};

/// mean / sample std * sqrt(252), risk-free rate 0. Needs at least 2 returns.
SharpeResult sharpe(const std::vector<double>& daily_returns);
SharpeResult sharpe(const TradeLedger& ledger);

/// Sample std of daily log returns * sqrt(252), in percent. Needs at least 3 prices.
double historical_volatility(const std::vector<double>& closes);

/// Closes from the day before the first forecast through the last forecast day.
std::vector<double> traded_closes(const TradeLedger& ledger);

std::string ledger_csv(const TradeLedger& ledger);
std::string backtest_summary_json(const TradeLedger& ledger);

}  // namespace iknet
