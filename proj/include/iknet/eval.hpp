// SPDX-License-Identifier: Apache-2.0
//
// Forecast metrics, Diebold-Mariano comparisons, and the ridge and
// persistence baselines. Metrics take index-point series only; the z-scored
// series type exists so that passing it is a compile error.
#pragma once

#include <string>
#include <vector>

#include "iknet/dataset.hpp"
#include "iknet/date.hpp"
#include "iknet/model.hpp"

namespace iknet {

struct IndexPoints {};
struct ZScore {};

template <class Unit>
struct BasicForecastSeries {
  std::string model;
  std::string fold;
  std::vector<Date> dates;
  std::vector<double> forecast;
  std::vector<double> actual;

  std::size_t size() const noexcept { return dates.size(); }
  void push_back(Date d, double yhat, double y) {
    dates.push_back(d);
    forecast.push_back(yhat);
    actual.push_back(y);
  }
};

using ForecastSeries = BasicForecastSeries<IndexPoints>;
using ScaledForecastSeries = BasicForecastSeries<ZScore>;

/// Throws ValidationError on non-increasing dates, ragged columns, or non-finite values.
void validate_series(const ForecastSeries& s);
ForecastSeries series_from_predictions(const std::vector<Prediction>& predictions, std::string model,
                                       std::string fold);

double rmse(const ForecastSeries& s);
/// Percent, symmetric denominator (|y| + |yhat|) / 2.
double smape(const ForecastSeries& s);
double rmse(const ScaledForecastSeries&) = delete;
double smape(const ScaledForecastSeries&) = delete;

/// Concatenation in date order (folds do not overlap).
ForecastSeries concat_series(const std::vector<ForecastSeries>& parts, std::string model, std::string fold);

enum class LossKind { squared, absolute };

struct DmResult {
  double statistic = 0.0;
  double p_value = 0.0;  // NaN when degenerate
  bool degenerate = false;
  LossKind loss = LossKind::squared;
  int horizon = 1;
  bool harvey = false;
  std::size_t n = 0;
};

/// d_t = loss(a) - loss(b); negative statistic means `a` is more accurate.
/// Lag-0 variance (one-step forecasts) and a two-sided normal p-value; with
/// `harvey` the small-sample correction and a Student-t(N-1) p-value.
DmResult dm_test(const ForecastSeries& a, const ForecastSeries& b, LossKind loss = LossKind::squared,
                 bool harvey = false);

struct RidgeModel {
  double lambda = 0.0;
  std::vector<double> weights;
  double intercept = 0.0;
  double predict(const double* x) const;
};

/// Closed-form ridge on rows of X with an unpenalized intercept.
RidgeModel fit_ridge(const Tensor& X, const std::vector<double>& y, double lambda);
/// Picks lambda by MSE on the chronologically last 20% of the rows, then refits on all rows.
RidgeModel fit_ridge_selected(const Tensor& X, const std::vector<double>& y,
                              const std::vector<double>& lambdas = {0.01, 0.1, 1.0, 10.0});

/// Ridge on flattened scaled indicator windows, predictions in index points.
ForecastSeries ridge_baseline(const std::vector<const Sample*>& train, const std::vector<const Sample*>& test,
                              const Scaler& scaler, const std::string& fold, RidgeModel* fitted = nullptr);
/// yhat(t+1) = close(t).
ForecastSeries persistence_baseline(const std::vector<const Sample*>& test, const std::string& fold);

struct MetricsRow {
  std::string model;
  std::string fold;
  std::size_t n = 0;
  double rmse = 0.0;
  double smape = 0.0;
};

MetricsRow metrics_row(const ForecastSeries& s);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Pairwise DM statistics (row model vs column model) with p-values.
std::string dm_matrix_csv(const std::vector<ForecastSeries>& models, LossKind loss = LossKind::squared,
                          bool harvey = false);

std::string forecasts_csv(const ForecastSeries& s);
ForecastSeries read_forecasts_csv(const std::filesystem::path& path);

}  // namespace iknet
