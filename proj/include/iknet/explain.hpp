// SPDX-License-Identifier: Apache-2.0
//
// Grouped Kernel SHAP over flat model rows. A coalition keeps the columns of
// its groups from the explained row and takes every other column from a
// background row; the coalition value is the model output averaged over the
// background set.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iknet/date.hpp"
#include "iknet/keywords.hpp"
#include "iknet/model.hpp"

namespace iknet {

enum class GroupKind { keyword, indicator, scalar, merged };

struct FeatureGroup {
  std::string label;
  GroupKind kind = GroupKind::indicator;
  /// Keyword slot for keyword groups (relabelled with that day's word), else unused.
  std::size_t slot = 0;
  std::vector<std::size_t> columns;  // flat-row column indices
};

struct FeatureGrouping {
  std::size_t width = 0;
  std::vector<FeatureGroup> groups;

  std::size_t size() const noexcept { return groups.size(); }
  /// Throws ValidationError unless the groups partition [0, width) and M >= 2.
  void validate() const;
};

/// n keyword groups followed by f indicator groups (each indicator's T-day trajectory).
FeatureGrouping default_grouping(const ModelConfig& config);
/// One group per input scalar.
FeatureGrouping per_scalar_grouping(const ModelConfig& config);
/// Merges contiguous groups of the same kind until at most `max_groups` remain.
FeatureGrouping coarsen(const FeatureGrouping& grouping, std::size_t max_groups);

/// Model output in index points for a batch of flat rows.
using BatchModel = std::function<std::vector<double>(const Tensor& rows)>;

/// Raw-price predictions of a trained model.
BatchModel raw_output(const IknetModel& model, const Scaler& scaler);

/// v(S) for coalitions of groups of one explained row.
class CoalitionGame {
 public:
  CoalitionGame(BatchModel model, const FeatureGrouping& grouping, std::vector<double> row, Tensor background,
                std::size_t jobs = 1);

  std::size_t players() const noexcept { return grouping_.size(); }
  /// Values for a list of coalitions, each a bitmask of length M.
  std::vector<double> values(const std::vector<std::vector<char>>& coalitions) const;
  double value(const std::vector<char>& coalition) const { return values({coalition})[0]; }

 private:
  BatchModel model_;
  FeatureGrouping grouping_;
  std::vector<double> row_;
  Tensor background_;
  std::size_t jobs_;
};

struct Attribution {
  Date date;
  double base = 0.0;                // phi_0 = v(empty)
  double output = 0.0;              // f(x) = v(all)
  std::vector<double> phi;          // one per group, index points
  std::vector<std::string> labels;  // group labels, keyword slots resolved to words
  std::vector<GroupKind> kinds;
  bool regularized = false;         // WLS system was singular
  /// |phi_0 + sum(phi) - f(x)|, recomputed after solving.
  double efficiency_gap() const;
};

struct ShapOptions {
  std::size_t coalitions = 256;
  std::uint64_t seed = 0;
  /// Enumerate every coalition when M is at most this.
  std::size_t exact_limit = 16;
};

/// Kernel SHAP with the efficiency constraint eliminated exactly. Size strata
/// are enumerated in full while the coalition budget allows (largest kernel
/// mass first); the remainder is filled with seeded paired samples.
Attribution kernel_shap(const CoalitionGame& game, const ShapOptions& options);
/// Shapley values by direct summation over all 2^M coalitions (M <= 16).
Attribution exact_shapley(const CoalitionGame& game);

/// Shapley kernel weight of a coalition of size s among M players.
double shapley_kernel(std::size_t M, std::size_t s);

/// Attributions for every sample against a shared background.
std::vector<Attribution> explain_samples(const IknetModel& model, const Scaler& scaler,
                                         const std::vector<const Sample*>& samples,
                                         const std::vector<const Sample*>& background,
                                         const FeatureGrouping& grouping, const ShapOptions& options,
                                         std::size_t jobs = 1, bool exact = false);

struct GroupImportance {
  std::string label;
  double mean_abs = 0.0;
};

/// Mean |phi| per group, descending, ties by label. Keyword groups take the
/// most frequent word across the attributions (ties lexicographic).
std::vector<GroupImportance> global_importance(const std::vector<Attribution>& attributions);
std::string importance_csv(const std::vector<GroupImportance>& ranking);

std::string attribution_to_json(const Attribution& a);
Attribution attribution_from_json(const std::string& text);

struct WordAttribution {
  std::string word;
  double phi = 0.0;
  int sign = 0;
  std::size_t rank = 0;  // 1 = largest |phi|
  double intensity = 0.0;  // |phi| / max |phi|, 0 when all are zero
  bool in_text = false;
};

struct TextReport {
  std::vector<WordAttribution> words;
  std::string json;
  std::string html;
};

/// Colours the day's keywords in `article` by the sign of their attribution.
TextReport render_text_attribution(const std::string& article, const KeywordSet& keywords,
                                   const Attribution& attribution);

}  // namespace iknet
