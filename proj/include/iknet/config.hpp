// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one TOML or JSON file with sections [paths], [dataset],
// [model], [train], [keywords], [shap], [backtest], [run]. Unknown sections
// and keys are rejected. `section.key=value` overrides are applied on top.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iknet/backtest.hpp"
#include "iknet/model.hpp"
#include "iknet/saliency.hpp"

namespace iknet {

struct PathsConfig {
  std::string ohlcv;
  std::string keywords;  // JSONL; takes precedence over `texts`
  std::string texts;     // directory of <date>.txt files
  std::string lexicon;
  std::string output = "out";
};

struct DatasetConfig {
  std::size_t window = 10;
  std::size_t keyword_count = 17;
  std::size_t keyword_dim = 32;
  int first_train_year = 2015;
  int folds = 7;
  int period_months = 12;
  int first_month = 1;
};

struct KeywordsConfig {
  std::string pooling = "max";
  std::size_t classifier_dim = 32;
  std::size_t classifier_epochs = 300;
  std::uint64_t classifier_seed = 7;
};

struct ShapConfig {
  std::size_t coalitions = 256;
  std::size_t background = 32;
  std::size_t dates_per_fold = 3;
  std::string grouping = "coarse";  // default | per_scalar | coarse
  std::size_t max_groups = 12;
  bool exact = false;
  std::uint64_t seed = 0;
};

struct RunSection {
  std::vector<std::string> variants{"full", "tech_only", "keyword_only"};
  bool baselines = true;
  std::size_t jobs = 1;
};

struct RunConfig {
  PathsConfig paths;
  DatasetConfig dataset;
  ModelConfig model;  // window, keyword_count, keyword_dim mirror [dataset]
  TrainConfig train;
  KeywordsConfig keywords;
  ShapConfig shap;
  StrategyConfig backtest;
  RunSection run;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// ModelConfig for one variant with the dataset dimensions filled in.
  ModelConfig model_for(Variant variant) const;
  SampleOptions sample_options() const;
};

/// Parses a config document (TOML unless the text is a JSON object).
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
/// Reads a file; relative input paths are resolved against its directory.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
/// Full serialization (every field), as pretty JSON.
std::string config_to_json(const RunConfig& config);

}  // namespace iknet
