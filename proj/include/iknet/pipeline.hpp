// SPDX-License-Identifier: Apache-2.0
//
// Walk-forward experiment: data preparation, per-fold training of every
// configured variant plus baselines, evaluation, backtest, attributions, and
// the artifact manifest.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iknet/config.hpp"
#include "iknet/dataset.hpp"
#include "iknet/eval.hpp"
#include "iknet/explain.hpp"
#include "iknet/model.hpp"

namespace iknet {

struct InputDigest {
  std::string path;
  std::string sha256;
};

struct PreparedData {
  OhlcvSeries bars;
  IndicatorFrame frame;
  std::vector<KeywordSet> keywords;
  bool keywords_extracted = false;  // true when built from raw texts
  std::map<Date, std::vector<std::string>> texts;
  AlignmentReport alignment;
  std::vector<Sample> samples;
  std::vector<FoldSpec> folds;
  std::vector<InputDigest> inputs;
};

/// Loads inputs named by `config.paths`, extracting keywords from texts when
/// no keyword file is given. Throws MissingDataError / ValidationError.
PreparedData prepare_data(const RunConfig& config, std::ostream& log);

/// Seed for one fold and purpose ("init", "train", "shap").
std::uint64_t fold_seed(std::uint64_t seed, const FoldSpec& fold, std::string_view purpose);

struct TrainedVariant {
  Variant variant = Variant::full;
  Checkpoint checkpoint;
  TrainResult result;
  ForecastSeries forecasts;
};

TrainedVariant train_variant(const RunConfig& config, const FoldSpec& fold, const FoldSplit& split,
                             const Scaler& scaler, Variant variant);

struct FoldRun {
  FoldSpec fold;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<TrainedVariant> models;       // config.run.variants order, full first
  std::vector<ForecastSeries> baselines;    // ridge, persistence
  std::vector<Attribution> attributions;    // full model
  AuditLog audit;

  const TrainedVariant& full() const;
  /// Models then baselines.
  std::vector<ForecastSeries> all_series() const;
};

FeatureGrouping grouping_for(const RunConfig& config);
/// `count` training samples at evenly spaced positions.
std::vector<const Sample*> background_samples(const std::vector<const Sample*>& train, std::size_t count);
/// `count` test samples at evenly spaced positions.
std::vector<const Sample*> explained_samples(const std::vector<const Sample*>& test, std::size_t count);

FoldRun run_fold(const RunConfig& config, const PreparedData& data, const FoldSpec& fold);

/// JSON written beside a checkpoint: config, fold, seeds, input digests, metrics.
std::string run_manifest_json(const RunConfig& config, const FoldSpec& fold, const TrainedVariant& trained,
                              const std::vector<InputDigest>& inputs);

/// Collects written files for the manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}
  void write(const std::string& relative, std::string_view content);
  const std::filesystem::path& root() const noexcept { return root_; }
  /// Sorted relative paths with digests.
  std::vector<InputDigest> artifacts() const;

 private:
  std::filesystem::path root_;
  std::map<std::string, std::string> digests_;
};

struct PipelineOptions {
  std::size_t jobs = 1;
  std::string seed_source = "config";  // "cli" when --seed was given
};

struct PipelineResult {
  std::vector<FoldRun> folds;
  std::vector<MetricsRow> metrics;
  std::vector<InputDigest> artifacts;
  std::filesystem::path output;
};

/// Runs every fold and writes all artifacts plus manifest.json under
/// `config.paths.output`.
PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options, std::ostream& log);

}  // namespace iknet
