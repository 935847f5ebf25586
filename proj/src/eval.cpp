// SPDX-License-Identifier: Apache-2.0
#include "iknet/eval.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

void validate_series(const ForecastSeries& s) {
  if (s.forecast.size() != s.dates.size() || s.actual.size() != s.dates.size()) {
    throw ValidationError("forecast series '" + s.model + "' has ragged columns");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0 && !(s.dates[i - 1] < s.dates[i])) {
      throw ValidationError("forecast series '" + s.model + "': dates not strictly increasing at " +
                            format_date(s.dates[i]));
    }
    if (!std::isfinite(s.forecast[i]) || !std::isfinite(s.actual[i])) {
      throw NumericError("forecast series '" + s.model + "': non-finite value on " + format_date(s.dates[i]));
    }
  }
}

ForecastSeries series_from_predictions(const std::vector<Prediction>& predictions, std::string model,
                                       std::string fold) {
  ForecastSeries s;
  s.model = std::move(model);
  s.fold = std::move(fold);
  for (const auto& p : predictions) s.push_back(p.date, p.forecast, p.actual);
  validate_series(s);
  return s;
}

namespace {

void require_nonempty(const ForecastSeries& s, const char* what) {
  validate_series(s);
  if (s.size() == 0) throw ValidationError(std::string(what) + " of an empty forecast series");
}

}  // namespace

double rmse(const ForecastSeries& s) {
  require_nonempty(s, "RMSE");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += (s.forecast[i] - s.actual[i]) * (s.forecast[i] - s.actual[i]);
  return std::sqrt(sum / static_cast<double>(s.size()));
}

double smape(const ForecastSeries& s) {
  require_nonempty(s, "SMAPE");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double denom = (std::abs(s.actual[i]) + std::abs(s.forecast[i])) / 2.0;
    if (denom > 0.0) sum += std::abs(s.forecast[i] - s.actual[i]) / denom;
  }
  return 100.0 * sum / static_cast<double>(s.size());
}

ForecastSeries concat_series(const std::vector<ForecastSeries>& parts, std::string model, std::string fold) {
  ForecastSeries out;
  out.model = std::move(model);
  out.fold = std::move(fold);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p.dates[i], p.forecast[i], p.actual[i]);
  }
  validate_series(out);
  return out;
}

DmResult dm_test(const ForecastSeries& a, const ForecastSeries& b, LossKind loss, bool harvey) {
  validate_series(a);
  validate_series(b);
  if (a.dates != b.dates) throw ValidationError("DM test: '" + a.model + "' and '" + b.model + "' are not aligned");
  const std::size_t N = a.size();
  if (N < 10) throw ValidationError("DM test needs at least 10 paired forecasts, got " + std::to_string(N));
  auto l = [loss](double e) { return loss == LossKind::squared ? e * e : std::abs(e); };
  std::vector<double> d(N);
  for (std::size_t t = 0; t < N; ++t) d[t] = l(a.forecast[t] - a.actual[t]) - l(b.forecast[t] - b.actual[t]);
  const double n = static_cast<double>(N);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double gamma0 = 0.0;
  for (double v : d) gamma0 += (v - mean) * (v - mean);
  gamma0 /= n;

  DmResult r;
  r.loss = loss;
  r.harvey = harvey;
  r.n = N;
  const bool constant = std::all_of(d.begin(), d.end(), [&](double v) { return v == d[0]; });
  if (constant || gamma0 == 0.0) {
    r.degenerate = true;
    r.statistic = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.statistic = mean / std::sqrt(gamma0 / n);
  if (harvey) {
    const double h = r.horizon;
    r.statistic *= std::sqrt((n + 1.0 - 2.0 * h + h * (h - 1.0) / n) / n);
    const boost::math::students_t dist(n - 1.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
  } else {
    r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
  }
  return r;
}

double RidgeModel::predict(const double* x) const {
  double s = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RidgeModel fit_rows(const Tensor& X, const std::vector<double>& y, std::size_t rows, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("ridge lambda must be positive");
  const std::size_t p = X.cols();
  const Eigen::Map<const RowMatrix> A(X.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  // Owned copy: reductions over a mapped std::vector depend on its alignment.
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(rows));
  const Eigen::RowVectorXd mean_x = A.colwise().mean();
  const double mean_y = b.mean();
  const Eigen::MatrixXd Ac = A.rowwise() - mean_x;
  const Eigen::VectorXd bc = b.array() - mean_y;
  Eigen::MatrixXd normal = Ac.transpose() * Ac;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd w = normal.ldlt().solve(Ac.transpose() * bc);
  RidgeModel m;
  m.lambda = lambda;
  m.weights.assign(w.data(), w.data() + w.size());
  m.intercept = mean_y - mean_x.dot(w);
  return m;
}

}  // namespace

RidgeModel fit_ridge(const Tensor& X, const std::vector<double>& y, double lambda) {
  if (X.rows() != y.size()) throw DimensionError("ridge: X has " + std::to_string(X.rows()) + " rows, y has " +
                                                 std::to_string(y.size()));
  if (y.empty()) throw ValidationError("ridge: empty training set");
  return fit_rows(X, y, y.size(), lambda);
}

RidgeModel fit_ridge_selected(const Tensor& X, const std::vector<double>& y, const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw ValidationError("ridge: no lambda candidates");
  if (X.rows() != y.size()) throw DimensionError("ridge: X and y row counts differ");
  const std::size_t N = y.size();
  const std::size_t fit_n = N * 4 / 5;
  double best_lambda = lambdas.front();
  if (fit_n >= 1 && fit_n < N) {
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {
      const RidgeModel m = fit_rows(X, y, fit_n, lambda);
      double mse = 0.0;
      for (std::size_t i = fit_n; i < N; ++i) {
        const double e = m.predict(X.data().data() + i * X.cols()) - y[i];
        mse += e * e;
      }
      if (mse < best) {
        best = mse;
        best_lambda = lambda;
      }
    }
  }
  return fit_ridge(X, y, best_lambda);
}

namespace {

Tensor window_rows(const std::vector<const Sample*>& samples, const Scaler& scaler) {
  if (samples.empty()) return Tensor({0, 0});
  const std::size_t width = samples.front()->window.size();
  Tensor X({samples.size(), width});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor z = scaler.transform_window(samples[i]->window);
    if (z.size() != width) throw DimensionError("ridge: samples have different window sizes");
    std::copy(z.data().begin(), z.data().end(), X.data().begin() + static_cast<long>(i * width));
  }
  return X;
}

}  // namespace

ForecastSeries ridge_baseline(const std::vector<const Sample*>& train, const std::vector<const Sample*>& test,
                              const Scaler& scaler, const std::string& fold, RidgeModel* fitted) {
  if (train.empty()) throw ValidationError("ridge baseline: empty training set");
  const Tensor X = window_rows(train, scaler);
  std::vector<double> y;
  for (const Sample* s : train) y.push_back(scaler.transform_target(s->target));
  const RidgeModel m = fit_ridge_selected(X, y);
  if (fitted) *fitted = m;
  ForecastSeries out;
  out.model = "ridge";
  out.fold = fold;
  const Tensor Xt = window_rows(test, scaler);
  for (std::size_t i = 0; i < test.size(); ++i) {
    out.push_back(test[i]->target_date, scaler.invert_target(m.predict(Xt.data().data() + i * Xt.cols())),
                  test[i]->target);
  }
  validate_series(out);
  return out;
}

ForecastSeries persistence_baseline(const std::vector<const Sample*>& test, const std::string& fold) {
  ForecastSeries out;
  out.model = "persistence";
  out.fold = fold;
  for (const Sample* s : test) out.push_back(s->target_date, s->last_close, s->target);
  validate_series(out);
  return out;
}

MetricsRow metrics_row(const ForecastSeries& s) { return {s.model, s.fold, s.size(), rmse(s), smape(s)}; }

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "model,fold,n,rmse,smape\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.fold + "," + std::to_string(r.n) + "," + format_double(r.rmse) + "," +
           format_double(r.smape) + "\n";
  }
  return out;
}

std::string dm_matrix_csv(const std::vector<ForecastSeries>& models, LossKind loss, bool harvey) {
  std::string out = "model_a,model_b,statistic,p_value,degenerate\n";
  for (const auto& a : models) {
    for (const auto& b : models) {
      if (&a == &b) continue;
      const DmResult r = dm_test(a, b, loss, harvey);
      out += a.model + "," + b.model + "," + format_double(r.statistic) + "," +
             (r.degenerate ? std::string("nan") : format_double(r.p_value)) + "," + (r.degenerate ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string forecasts_csv(const ForecastSeries& s) {
  std::string out = "date,model,fold,forecast,actual\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += format_date(s.dates[i]) + "," + s.model + "," + s.fold + "," + format_double(s.forecast[i]) + "," +
           format_double(s.actual[i]) + "\n";
  }
  return out;
}

ForecastSeries read_forecasts_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"date", "model", "fold", "forecast", "actual"}) {
    throw ValidationError(path.string() + ": expected header date,model,fold,forecast,actual");
  }
  ForecastSeries s;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = path.string() + ":" + std::to_string(t.lines[i]);
    if (i == 0) {
      s.model = r[1];
      s.fold = r[2];
    }
    s.push_back(parse_date(r[0]), parse_double(r[3], where), parse_double(r[4], where));
  }
  validate_series(s);
  return s;
}

}  // namespace iknet
