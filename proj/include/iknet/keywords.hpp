// SPDX-License-Identifier: Apache-2.0
//
// Per-day keyword sets and their JSON Lines file format:
//
//   {"date": "2024-03-01", "articles": 3,
//    "keywords": [{"word": "growth", "saliency": 0.41, "embedding": [...]}, ...]}
//
// Keywords are sorted by saliency descending (ties by word); every embedding
// in a file has the same dimension.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iknet/date.hpp"

namespace iknet {

struct Keyword {
  std::string word;
  double saliency = 0.0;
  std::vector<double> embedding;
};

struct KeywordSet {
  Date date;
  int articles = 0;
  std::vector<Keyword> entries;
};

/// Orders keywords by saliency descending, then word ascending.
bool keyword_before(const Keyword& a, const Keyword& b);
void sort_keywords(std::vector<Keyword>& entries);

/// Problems found in one JSONL record (empty when valid). `dim` is the file's
/// embedding dimension if already known; it is set from the first keyword seen.
std::vector<std::string> validate_keyword_record(const std::string& line, std::optional<std::size_t>& dim);

struct KeywordFile {
  std::vector<KeywordSet> days;
  /// Embedding dimension; empty if the file has no keywords at all.
  std::optional<std::size_t> dim;
};

/// Parses and validates a whole file; throws ValidationError listing the
/// first problem with its line number. Dates must be strictly increasing.
KeywordFile read_keywords_jsonl(const std::filesystem::path& path);
/// All problems in a file, as "line N: message" strings.
std::vector<std::string> validate_keywords_jsonl(const std::filesystem::path& path);
std::string keyword_set_to_jsonl(const KeywordSet& set);
void write_keywords_jsonl(const std::filesystem::path& path, const std::vector<KeywordSet>& days);

/// Combines sets that land on the same trading day: article counts add and a
/// word keeps its highest-saliency entry.
KeywordSet merge_keyword_sets(const std::vector<const KeywordSet*>& sets, const Date& date);

}  // namespace iknet
