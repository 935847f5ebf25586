// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "iknet/backtest.hpp"
#include "iknet/error.hpp"

using namespace iknet;

namespace {

PricePath path(const std::vector<double>& closes) {
  PricePath p;
  Date d = make_date(2023, 1, 2);
  for (double c : closes) {
    p.dates.push_back(d);
    p.closes.push_back(c);
    d = from_day_number(day_number(d) + 1);
  }
  return p;
}

// Forecasts for days 1..N of the path.
ForecastSeries forecasts(const PricePath& p, const std::vector<double>& yhat) {
  ForecastSeries s;
  s.model = "m";
  for (std::size_t i = 0; i < yhat.size(); ++i) s.push_back(p.dates[i + 1], yhat[i], p.closes[i + 1]);
  return s;
}

StrategyConfig cfg(double c, BacktestMode m = BacktestMode::standard) {
  StrategyConfig s;
  s.cost = c;
  s.mode = m;
  return s;
}

PricePath random_walk(std::size_t n, std::uint64_t seed) {
  Philox rng(seed);
  std::vector<double> closes{1000.0};
  for (std::size_t i = 1; i < n; ++i) closes.push_back(closes.back() * std::exp(0.01 * rng.normal()));
  return path(closes);
}

std::vector<double> noisy_forecasts(const PricePath& p, Philox& rng) {
  std::vector<double> out;
  for (std::size_t i = 1; i < p.closes.size(); ++i) out.push_back(p.closes[i] + 10.0 * rng.normal());
  return out;
}

}  // namespace

TEST_CASE("never long means nothing happens") {
  const auto p = path({100, 101, 99, 102});
  const auto l = simulate(forecasts(p, {99, 100, 98}), p, cfg(0.003));
  CHECK(l.cumulative_percent == 0.0);
  CHECK(l.entries == 0);
  CHECK(l.exits == 0);
  for (const auto& d : l.days) CHECK(d.cost == 0.0);
}

TEST_CASE("one held day without costs") {
  const auto p = path({100.0, 100.0 * std::exp(0.01)});
  const auto l = simulate(forecasts(p, {150.0}), p, cfg(0.0));
  CHECK(l.total_log_return == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(l.cumulative_percent == doctest::Approx((std::exp(0.01) - 1.0) * 100.0).epsilon(1e-13));
  CHECK(l.cumulative_percent == doctest::Approx(1.00502).epsilon(1e-5));
}

TEST_CASE("five-day fixture against a scripted recomputation") {
  const auto p = path({100, 102, 101, 103, 104, 102});
  const auto l = simulate(forecasts(p, {101, 100, 102, 105, 103}), p, cfg(0.003));
  const double c = std::log(1.0 - 0.003);
  const std::vector<bool> pos{true, false, true, true, false};
  const std::vector<double> net{std::log(102.0 / 100.0) + c, c, std::log(103.0 / 101.0) + c, std::log(104.0 / 103.0), c};
  REQUIRE(l.days.size() == 5);
  double cum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(l.days[i].long_position == pos[i]);
    CHECK(std::abs(l.days[i].net - net[i]) < 1e-12);
    cum += net[i];
    CHECK(std::abs(l.days[i].cumulative_percent - (std::exp(cum) - 1.0) * 100.0) < 1e-12);
  }
  CHECK(l.entries == 2);
  CHECK(l.exits == 2);
  CHECK(std::abs(l.total_log_return - cum) < 1e-12);
  const auto literal = simulate(forecasts(p, {101, 100, 102, 105, 103}), p, cfg(0.003, BacktestMode::literal));
  CHECK(literal.total_log_return == doctest::Approx(l.total_log_return).epsilon(1e-15));
}

TEST_CASE("open position is liquidated on the last day") {
  const auto p = path({100, 101, 102});
  const auto l = simulate(forecasts(p, {200, 200}), p, cfg(0.01));
  CHECK(l.entries == 1);
  CHECK(l.exits == 1);
  CHECK(l.days.back().cost == doctest::Approx(std::log(0.99)).epsilon(1e-15));
  CHECK(l.total_log_return == doctest::Approx(std::log(102.0 / 100.0) + 2 * std::log(0.99)).epsilon(1e-14));
}

TEST_CASE("literal zeroes losing long days only") {
  const auto p = path({100, 98, 99});
  const auto std_l = simulate(forecasts(p, {101, 100}), p, cfg(0.0));
  const auto lit = simulate(forecasts(p, {101, 100}), p, cfg(0.0, BacktestMode::literal));
  CHECK(std_l.days[0].gross == doctest::Approx(std::log(0.98)));
  CHECK(lit.days[0].gross == 0.0);
  CHECK(lit.days[1].gross == doctest::Approx(std::log(99.0 / 98.0)));
}

TEST_CASE("strategy properties on random walks") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = random_walk(120, seed);
    Philox rng(seed + 100);
    const auto f = forecasts(p, noisy_forecasts(p, rng));
    // Cost monotonicity.
    double prev = INFINITY;
    for (double c : {0.0, 0.001, 0.003, 0.01, 0.05}) {
      const double r = simulate(f, p, cfg(c)).cumulative_percent;
      CHECK(r <= prev);
      prev = r;
    }
    // Literal mode never does worse.
    CHECK(simulate(f, p, cfg(0.003, BacktestMode::literal)).total_log_return >=
          simulate(f, p, cfg(0.003)).total_log_return);
    // Zero-cost perfect foresight dominates buy-and-hold.
    const auto perfect = forecasts(p, std::vector<double>(p.closes.begin() + 1, p.closes.end()));
    const double hold = std::log(p.closes.back() / p.closes.front());
    CHECK(simulate(perfect, p, cfg(0.0)).total_log_return >= hold - 1e-12);
  }
}

TEST_CASE("Sharpe ratio") {
  CHECK_FALSE(sharpe(std::vector<double>(10, 0.001)).defined);
  std::vector<double> alt;
  for (int i = 0; i < 100; ++i) alt.push_back(i % 2 ? 0.01 : -0.01);
  const SharpeResult s = sharpe(alt);
  CHECK(s.defined);
  CHECK(s.value == 0.0);
  CHECK_THROWS_AS(sharpe(std::vector<double>{0.1}), ValidationError);

  // i.i.d. returns with daily mean/std = 0.5: annualised 0.5 * sqrt(252).
  Philox rng(11);
  std::vector<double> r(2520);
  for (double& v : r) v = 0.005 + 0.01 * rng.normal();
  const double theory = 0.5 * std::sqrt(252.0);
  CHECK(std::abs(sharpe(r).value - theory) < 0.1 * theory);
}

TEST_CASE("historical volatility") {
  // Alternating +-r log returns: sample std = r * sqrt(n / (n - 1)).
  std::vector<double> closes{100.0};
  for (int i = 0; i < 10; ++i) closes.push_back(closes.back() * std::exp(i % 2 ? -0.02 : 0.02));
  const double sd = 0.02 * std::sqrt(10.0 / 9.0);
  CHECK(historical_volatility(closes) == doctest::Approx(sd * std::sqrt(252.0) * 100.0).epsilon(1e-12));
  CHECK(historical_volatility({5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(historical_volatility({1, 2}), ValidationError);
}

TEST_CASE("alignment and configuration errors") {
  const auto p = path({100, 101, 102, 103});
  ForecastSeries f = forecasts(p, {1, 2, 3});
  CHECK_THROWS_AS(simulate(f, p, cfg(1.0)), ValidationError);
  ForecastSeries first;
  first.push_back(p.dates[0], 1, 100);
  CHECK_THROWS_AS(simulate(first, p, cfg(0.0)), ValidationError);
  ForecastSeries gap;
  gap.push_back(p.dates[1], 1, 101);
  gap.push_back(p.dates[3], 1, 103);
  CHECK_THROWS_AS(simulate(gap, p, cfg(0.0)), ValidationError);
  f.actual[0] = 55;
  CHECK_THROWS_AS(simulate(f, p, cfg(0.0)), ValidationError);
  CHECK_THROWS_AS(parse_backtest_mode("short"), ValidationError);
}

TEST_CASE("ledger CSV and summary JSON") {
  const auto p = path({100, 102, 101, 103, 104, 102});
  const auto l = simulate(forecasts(p, {101, 100, 102, 105, 103}), p, cfg(0.003));
  const std::string csv = ledger_csv(l);
  CHECK(csv.starts_with("date,position,forecast,reference,close,R_t,cost,net,cumulative_percent\n2023-01-03,long,"));
  const auto j = nlohmann::json::parse(backtest_summary_json(l));
  CHECK(j["mode"] == "standard");
  CHECK(j["entries"] == 2);
  CHECK(j["cumulative_return_percent"].get<double>() == l.cumulative_percent);
  CHECK(j["hv_percent"].get<double>() == doctest::Approx(historical_volatility(p.closes)));
  CHECK(j["buy_and_hold_percent"].get<double>() == doctest::Approx(2.0));
}
