// SPDX-License-Identifier: Apache-2.0
#include "iknet/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_std(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

std::string bar_context(const OhlcvBar& bar) { return "bar " + format_date(bar.date); }

}  // namespace

OhlcvSeries::OhlcvSeries(std::vector<OhlcvBar> bars) : bars_(std::move(bars)) {
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    const auto& b = bars_[i];
    if (i > 0 && !(bars_[i - 1].date < b.date)) {
      throw ValidationError(bar_context(b) + ": dates must be strictly increasing");
    }
    if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0)) {
      throw ValidationError(bar_context(b) + ": prices must be positive");
    }
    if (b.volume < 0) throw ValidationError(bar_context(b) + ": negative volume");
    const double hi = std::max(b.open, b.close);
    const double lo = std::min(b.open, b.close);
    if (b.high < hi || b.low > lo) {
      throw ValidationError(bar_context(b) + ": high/low do not bracket open/close");
    }
  }
}

std::vector<double> OhlcvSeries::closes() const {
  std::vector<double> out;
  out.reserve(bars_.size());
  for (const auto& b : bars_) out.push_back(b.close);
  return out;
}

std::vector<double> OhlcvSeries::volumes() const {
  std::vector<double> out;
  out.reserve(bars_.size());
  for (const auto& b : bars_) out.push_back(b.volume);
  return out;
}

std::vector<Date> OhlcvSeries::dates() const {
  std::vector<Date> out;
  out.reserve(bars_.size());
  for (const auto& b : bars_) out.push_back(b.date);
  return out;
}

std::size_t OhlcvSeries::lower_bound(const Date& date) const {
  auto it = std::lower_bound(bars_.begin(), bars_.end(), date,
                             [](const OhlcvBar& b, const Date& d) { return b.date < d; });
  return static_cast<std::size_t>(it - bars_.begin());
}

long OhlcvSeries::index_of(const Date& date) const {
  const auto i = lower_bound(date);
  return i < bars_.size() && bars_[i].date == date ? static_cast<long>(i) : -1;
}

OhlcvSeries OhlcvSeries::head(std::size_t count) const {
  count = std::min(count, bars_.size());
  return OhlcvSeries(std::vector<OhlcvBar>(bars_.begin(), bars_.begin() + static_cast<long>(count)));
}

OhlcvSeries read_ohlcv_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const std::vector<std::string> expected{"date", "open", "high", "low", "close", "volume"};
  if (table.header != expected) {
    throw ValidationError(path.string() + ": header must be date,open,high,low,close,volume");
  }
  std::vector<OhlcvBar> bars;
  bars.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::string ctx = path.string() + ":" + std::to_string(table.lines[r]);
    OhlcvBar b;
    try {
      b.date = parse_date(f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
    b.open = parse_double(f[1], ctx);
    b.high = parse_double(f[2], ctx);
    b.low = parse_double(f[3], ctx);
    b.close = parse_double(f[4], ctx);
    b.volume = parse_double(f[5], ctx);
    bars.push_back(b);
  }
  return OhlcvSeries(std::move(bars));
}

void write_ohlcv_csv(const std::filesystem::path& path, const OhlcvSeries& series) {
  std::ostringstream out;
  out << "date,open,high,low,close,volume\n";
  for (const auto& b : series.bars()) {
    out << format_date(b.date) << ',' << format_double(b.open) << ',' << format_double(b.high) << ','
        << format_double(b.low) << ',' << format_double(b.close) << ',' << format_double(b.volume) << '\n';
  }
  write_file(path, out.str());
}

Series sma(std::span<const double> x, std::size_t n) {
  Series out(x.size(), kNaN);
  if (n == 0) throw ValidationError("sma window must be positive");
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = t + 1 - n; j <= t; ++j) s += x[j];
    out[t] = s / static_cast<double>(n);
  }
  return out;
}

Series ema(std::span<const double> x, std::size_t n) {
  Series out(x.size(), kNaN);
  if (n == 0) throw ValidationError("ema window must be positive");
  // Skip leading NaNs so EMA-of-EMA chains (MACD signal) seed correctly.
  std::size_t start = 0;
  while (start < x.size() && std::isnan(x[start])) ++start;
  if (x.size() - start < n) return out;
  const double alpha = 2.0 / (static_cast<double>(n) + 1.0);
  double seed = 0.0;
  for (std::size_t j = start; j < start + n; ++j) seed += x[j];
  double value = seed / static_cast<double>(n);
  out[start + n - 1] = value;
  for (std::size_t t = start + n; t < x.size(); ++t) {
    value += alpha * (x[t] - value);
    out[t] = value;
  }
  return out;
}

Series rsi(std::span<const double> close, std::size_t n) {
  Series out(close.size(), kNaN);
  if (n == 0) throw ValidationError("rsi window must be positive");
  if (close.size() < n + 1) return out;
  auto value = [](double gain, double loss) {
    if (gain == 0.0 && loss == 0.0) return 50.0;
    if (loss == 0.0) return 100.0;
    if (gain == 0.0) return 0.0;
    return 100.0 - 100.0 / (1.0 + gain / loss);
  };
  double gain = 0.0, loss = 0.0;
  for (std::size_t t = 1; t <= n; ++t) {
    const double change = close[t] - close[t - 1];
    gain += std::max(change, 0.0);
    loss += std::max(-change, 0.0);
  }
  const double nd = static_cast<double>(n);
  gain /= nd;
  loss /= nd;
  out[n] = value(gain, loss);
  for (std::size_t t = n + 1; t < close.size(); ++t) {
    const double change = close[t] - close[t - 1];
    gain = (gain * (nd - 1.0) + std::max(change, 0.0)) / nd;
    loss = (loss * (nd - 1.0) + std::max(-change, 0.0)) / nd;
    out[t] = value(gain, loss);
  }
  return out;
}

MacdSeries macd_family(std::span<const double> close) {
  const Series fast = ema(close, 12);
  const Series slow = ema(close, 26);
  MacdSeries m;
  m.macd.assign(close.size(), kNaN);
  for (std::size_t t = 0; t < close.size(); ++t) m.macd[t] = fast[t] - slow[t];
  m.signal = ema(m.macd, 9);
  m.diff.assign(close.size(), kNaN);
  for (std::size_t t = 0; t < close.size(); ++t) m.diff[t] = m.macd[t] - m.signal[t];
  return m;
}

BollingerSeries bollinger(std::span<const double> close, std::size_t n, double k) {
  if (k < 0) throw ValidationError("bollinger k must be non-negative");
  BollingerSeries b;
  b.middle = sma(close, n);
  b.upper.assign(close.size(), kNaN);
  b.lower.assign(close.size(), kNaN);
  for (std::size_t t = n - 1; t < close.size(); ++t) {
    const double sd = population_std(close.subspan(t + 1 - n, n));
    b.upper[t] = b.middle[t] + k * sd;
    b.lower[t] = b.middle[t] - k * sd;
  }
  return b;
}

AuxiliarySeries auxiliary(std::span<const double> close, std::span<const double> volume) {
  if (close.size() != volume.size()) throw DimensionError("close and volume lengths differ");
  const std::size_t len = close.size();
  AuxiliarySeries a;
  a.volatility_ratio.assign(len, kNaN);
  a.volume_change.assign(len, kNaN);
  a.sma_deviation.assign(len, kNaN);

  std::vector<double> log_ret(len, kNaN);
  for (std::size_t t = 1; t < len; ++t) log_ret[t] = std::log(close[t] / close[t - 1]);
  for (std::size_t t = 30; t < len; ++t) {
    const double long_sd = population_std(std::span<const double>(log_ret).subspan(t - 29, 30));
    const double short_sd = population_std(std::span<const double>(log_ret).subspan(t - 9, 10));
    a.volatility_ratio[t] = long_sd == 0.0 ? 1.0 : short_sd / long_sd;
  }
  for (std::size_t t = 1; t < len; ++t) {
    a.volume_change[t] = volume[t - 1] == 0.0 ? 0.0 : (volume[t] - volume[t - 1]) / volume[t - 1];
  }
  const Series s10 = sma(close, 10);
  for (std::size_t t = 9; t < len; ++t) a.sma_deviation[t] = (close[t] - s10[t]) / s10[t];
  return a;
}

IndicatorFrame compute_indicators(const OhlcvSeries& series) {
  const auto close = series.closes();
  const auto volume = series.volumes();
  const Series s10 = sma(close, 10);
  const Series e10 = ema(close, 10);
  const Series r14 = rsi(close, 14);
  const MacdSeries m = macd_family(close);
  const BollingerSeries bb = bollinger(close, 20, 2.0);
  const AuxiliarySeries aux = auxiliary(close, volume);

  IndicatorFrame frame;
  frame.dates = series.dates();
  frame.rows.resize(series.size());
  frame.valid.resize(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto& bar = series[t];
    FeatureRow& row = frame.rows[t];
    row = {bar.open,       bar.high,        bar.low,       bar.close,           bar.volume,        s10[t],
           e10[t],         r14[t],          m.macd[t],     m.signal[t],         m.diff[t],         bb.upper[t],
           bb.middle[t],   bb.lower[t],     aux.volatility_ratio[t], aux.volume_change[t], aux.sma_deviation[t]};
    frame.valid[t] = t >= kWarmupRows && std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); });
  }
  return frame;
}

void write_indicator_csv(const std::filesystem::path& path, const IndicatorFrame& frame) {
  std::ostringstream out;
  out << "date";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < frame.size(); ++t) {
    if (!frame.valid[t]) continue;
    out << format_date(frame.dates[t]);
    for (double v : frame.rows[t]) out << ',' << format_double(v);
    out << '\n';
  }
  write_file(path, out.str());
}

}  // namespace iknet
