// SPDX-License-Identifier: Apache-2.0
//
// Synthetic market with keyword-carried shocks.
//
// Log returns follow
//   r[t+1] = -ar_reversion * sma_deviation[t] + ar_momentum * r[t]
//            - anchor_pull * (log P[t] - log start_price) + shock[t] + noise
// where shock[t] is a linear readout of the embeddings of the "signal" words
// published on day t. Each day also carries "distractor" words whose true
// effect is zero. Signal words tend to rank higher in saliency but the two
// ranges overlap, so short keyword lists miss signal and long ones admit
// distractors. Embedding dimension 0 is a noisy signal/distractor flag.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iknet/indicators.hpp"
#include "iknet/keywords.hpp"
#include "iknet/saliency.hpp"

namespace iknet {

struct SynthOptions {
  Date start;
  std::size_t trading_days = 0;  // weekdays from `start`
  std::uint64_t seed = 1;
  std::size_t keyword_dim = 8;
  double start_price = 4000.0;
  double shock_scale = 0.012;  // std of the daily shock term
  double noise_sd = 0.004;
  double ar_reversion = 0.25;
  double ar_momentum = 0.05;
  double anchor_pull = 0.02;
  double flag_noise = 0.45;
  std::size_t min_signal_words = 2;
  std::size_t max_signal_words = 14;
  std::size_t min_distractors = 12;
  std::size_t max_distractors = 28;
  std::size_t distractor_vocabulary = 160;
  std::size_t articles_per_day = 3;
  /// Adds small distractor-only records on some weekends.
  bool weekend_news = false;
  bool texts = false;
};

/// 2014-09-01 through the end of 2024: warm-up plus ten calendar years.
SynthOptions ten_year_options(std::uint64_t seed);
/// 600 trading days from 2014-11-03 with raw texts and weekend records.
SynthOptions fixture_options(std::uint64_t seed);

struct SynthWord {
  std::string word;
  bool signal = false;
  double effect = 0.0;  // unit-scale contribution to the shock
  std::vector<double> embedding;
};

struct SynthMarket {
  OhlcvSeries bars;
  std::vector<KeywordSet> keywords;  // every candidate word, sorted by saliency
  std::map<Date, std::vector<std::string>> texts;
  std::vector<double> shock;         // per bar, realised on the next bar
  std::vector<SynthWord> vocabulary;
};

SynthMarket generate_market(const std::vector<LexiconEntry>& lexicon, const SynthOptions& options);

/// Writes ohlcv.csv, keywords.jsonl, and (when present) texts/<date>.txt.
std::vector<std::filesystem::path> write_market(const std::filesystem::path& dir, const SynthMarket& market);

}  // namespace iknet
