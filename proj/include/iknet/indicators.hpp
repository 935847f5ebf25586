// SPDX-License-Identifier: Apache-2.0
//
// Technical indicators over daily OHLCV bars. Every series function returns a
// vector aligned with its input; entries without enough history are NaN.
#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "iknet/date.hpp"

namespace iknet {

struct OhlcvBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

class OhlcvSeries {
 public:
  OhlcvSeries() = default;
  /// Validates ordering and bar consistency; throws ValidationError.
  explicit OhlcvSeries(std::vector<OhlcvBar> bars);

  std::size_t size() const noexcept { return bars_.size(); }
  bool empty() const noexcept { return bars_.empty(); }
  const OhlcvBar& operator[](std::size_t i) const { return bars_[i]; }
  const std::vector<OhlcvBar>& bars() const noexcept { return bars_; }
  std::vector<double> closes() const;
  std::vector<double> volumes() const;
  std::vector<Date> dates() const;
  /// Index of `date`, or -1 if it is not a trading day in the series.
  long index_of(const Date& date) const;
  /// First index whose date is >= `date` (size() if none).
  std::size_t lower_bound(const Date& date) const;
  /// First `count` bars.
  OhlcvSeries head(std::size_t count) const;

 private:
  std::vector<OhlcvBar> bars_;
};

/// Reads `date,open,high,low,close,volume`.
OhlcvSeries read_ohlcv_csv(const std::filesystem::path& path);
void write_ohlcv_csv(const std::filesystem::path& path, const OhlcvSeries& series);

using Series = std::vector<double>;

Series sma(std::span<const double> x, std::size_t n = 10);
/// alpha = 2/(n+1), seeded with the SMA of the first n values.
Series ema(std::span<const double> x, std::size_t n = 10);
/// Wilder-smoothed RSI; flat windows give 50.
Series rsi(std::span<const double> close, std::size_t n = 14);

struct MacdSeries {
  Series macd, signal, diff;
};
/// MACD(12, 26, 9). The signal EMA starts once 9 MACD values exist.
MacdSeries macd_family(std::span<const double> close);

struct BollingerSeries {
  Series upper, middle, lower;
};
/// SMA(n) middle band, +-k population standard deviations.
BollingerSeries bollinger(std::span<const double> close, std::size_t n = 20, double k = 2.0);

struct AuxiliarySeries {
  Series volatility_ratio, volume_change, sma_deviation;
};
/// volatility_ratio: std of the last 10 log returns over std of the last 30
/// (1 when the latter is 0). volume_change: relative change, 0 after a zero
/// volume. sma_deviation: (close - SMA10) / SMA10.
AuxiliarySeries auxiliary(std::span<const double> close, std::span<const double> volume);

inline constexpr std::size_t kFeatureCount = 17;
inline constexpr std::size_t kWarmupRows = 33;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "open",      "high",     "low",      "close",    "volume",           "sma10",         "ema10",
    "rsi14",     "macd",     "signal",   "macd_diff", "bb_upper",        "bb_middle",     "bb_lower",
    "volatility_ratio",      "volume_change",       "sma_deviation"};

/// Index of the close column in the feature order.
inline constexpr std::size_t kCloseFeature = 3;

using FeatureRow = std::array<double, kFeatureCount>;

struct IndicatorFrame {
  std::vector<Date> dates;
  std::vector<FeatureRow> rows;
  /// False inside the warm-up horizon or where any feature is undefined.
  std::vector<bool> valid;

  std::size_t size() const noexcept { return rows.size(); }
};

IndicatorFrame compute_indicators(const OhlcvSeries& series);
/// Writes date + 17 named columns; invalid rows are omitted.
void write_indicator_csv(const std::filesystem::path& path, const IndicatorFrame& frame);

}  // namespace iknet
