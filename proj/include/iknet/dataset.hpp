// SPDX-License-Identifier: Apache-2.0
//
// Supervised samples, feature scaling, and walk-forward folds.
//
// A sample anchored at trading day t carries the T indicator rows ending at t,
// the keyword set attached to t (news available before t+1 opens), and the
// close of day t+1 as target.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "iknet/date.hpp"
#include "iknet/indicators.hpp"
#include "iknet/keywords.hpp"
#include "iknet/tensor.hpp"

namespace iknet {

struct Sample {
  std::size_t anchor_index = 0;  // row of the anchor day in the indicator frame
  Date anchor_date;
  Date target_date;
  Tensor window;    // [T x f] raw indicator values
  Tensor keywords;  // [n x d] embeddings, zero rows after `keyword_count`
  std::size_t keyword_count = 0;
  std::vector<std::string> words;  // size n, empty strings for padding
  double target = 0.0;             // raw next-day close
  double last_close = 0.0;         // raw close on the anchor day
};

struct AlignmentReport {
  std::size_t attached = 0;      // keyword records mapped onto a trading day
  std::size_t shifted = 0;       // of those, records dated on a non-trading day
  std::size_t dropped = 0;       // records after the last trading day
  std::size_t merged_days = 0;   // trading days that received more than one record
};

/// Maps keyword records onto the trading calendar (entry i <-> calendar[i]).
/// Records on non-trading days attach to the next trading day.
std::vector<std::optional<KeywordSet>> align_keywords(const std::vector<KeywordSet>& days,
                                                      const std::vector<Date>& calendar,
                                                      AlignmentReport* report = nullptr);

struct SampleOptions {
  std::size_t window = 10;         // T
  std::size_t keyword_count = 17;  // n
  std::size_t keyword_dim = 32;    // d
};

/// One sample per anchor with T valid rows ending at it and a next trading day.
std::vector<Sample> assemble_samples(const IndicatorFrame& frame,
                                     const std::vector<std::optional<KeywordSet>>& keywords,
                                     const SampleOptions& options);

/// Per-feature z-scoring of indicator windows plus the target.
struct Scaler {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> scale{};
  double target_mean = 0.0;
  double target_scale = 1.0;
  /// Identifies the training split the statistics came from.
  std::string tag;

  /// Statistics over the distinct indicator rows covered by the training
  /// windows and over the training targets. Constant columns get scale 1.
  static Scaler fit(const std::vector<const Sample*>& train, std::string tag);

  Tensor transform_window(const Tensor& window) const;
  Tensor invert_window(const Tensor& scaled) const;
  double transform_target(double y) const { return (y - target_mean) / target_scale; }
  double invert_target(double z) const { return z * target_scale + target_mean; }

  std::string to_json() const;
  static Scaler from_json(const std::string& text);
};

/// Calendar span [start, end] in whole months.
struct Period {
  Date start;
  Date end;  // inclusive last day
  bool contains(const Date& d) const { return !(d < start) && !(end < d); }
  std::string label() const;
};

struct FoldSpec {
  int index = 1;  // 1-based
  int period_months = 12;
  Period train;
  Period test;
  std::string label() const;
};

/// Walk-forward folds: 3 training periods then 1 test period, shifting by one
/// period per fold. With 12-month periods starting in January these are
/// calendar years.
std::vector<FoldSpec> build_folds(int first_train_year, int n_folds, int period_months = 12, int first_month = 1);

/// Throws MissingDataError unless every period of every fold has trading days
/// in `calendar`.
void check_coverage(const std::vector<FoldSpec>& folds, const std::vector<Date>& calendar);

struct FoldSplit {
  std::vector<const Sample*> train;
  std::vector<const Sample*> test;
};

/// Assigns samples by target date.
FoldSplit split_samples(const std::vector<Sample>& samples, const FoldSpec& fold);

/// Dates touched while fitting one fold, for leakage audits.
struct AuditLog {
  std::vector<std::string> lines;

  /// Records every indicator, keyword, and target date a training sample reads.
  void record_training(const FoldSpec& fold, const std::vector<const Sample*>& train, const std::vector<Date>& calendar,
                       std::size_t window);
  void record_test(const FoldSpec& fold, const std::vector<const Sample*>& test);
  std::string text() const;
};

}  // namespace iknet
