// SPDX-License-Identifier: Apache-2.0
//
// Gradient-saliency keyword extraction. A token's saliency is the L2 norm of
// the gradient of the predicted class's logit with respect to that token's
// input embedding; sub-word pieces are merged back into words by averaging,
// pooled across a day's articles, and the top-n words are re-embedded.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iknet/keywords.hpp"
#include "iknet/nn.hpp"

namespace iknet {

struct Piece {
  std::string text;           // without any continuation marker
  bool continuation = false;  // true for the second and later pieces of a word
  std::string display() const { return continuation ? "##" + text : text; }
};

class SentimentClassifier {
 public:
  virtual ~SentimentClassifier() = default;
  virtual std::vector<Piece> tokenize(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
  /// [pieces x dim] input embeddings.
  virtual Tensor embed(const std::vector<Piece>& pieces) const = 0;
  /// Class logits [1 x classes] for an embedding sequence on `tape`.
  virtual Var score(Tape& tape, Var embeddings) const = 0;
};

struct PieceSaliency {
  Piece piece;
  double saliency = 0.0;
};

/// Backpropagates the predicted-class logit only; other classes contribute nothing.
std::vector<PieceSaliency> token_saliency(std::string_view text, const SentimentClassifier& clf);

struct WordSaliency {
  std::string word;
  double saliency = 0.0;
};

bool is_stop_word(std::string_view word);
/// Joins continuation pieces onto their word (mean saliency), keeping text
/// order; stop-words and punctuation-only words are dropped.
std::vector<WordSaliency> merge_subwords(const std::vector<PieceSaliency>& pieces);

enum class Pooling { max, mean };
Pooling parse_pooling(std::string_view name);

/// Top-n words of one day's articles. A word's saliency is pooled over all its
/// occurrences; ties break lexicographically. Each keyword is re-embedded on
/// its own as the mean of its piece embeddings.
KeywordSet extract_keywords(const std::vector<std::string>& articles, const SentimentClassifier& clf, std::size_t n,
                            Pooling pooling = Pooling::max, Date date = {});

/// Mean piece embedding of `word` tokenized in isolation.
std::vector<double> embed_word(std::string_view word, const SentimentClassifier& clf);

enum class Polarity { positive = 0, negative = 1, neutral = 2 };

struct LexiconEntry {
  std::string word;
  Polarity polarity;
};

/// CSV `word,polarity` with polarity in {pos, neg, neu}.
std::vector<LexiconEntry> read_lexicon(const std::filesystem::path& path);

struct ToyClassifierOptions {
  std::size_t dim = 32;
  std::size_t hidden = 16;
  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::uint64_t seed = 7;
};

/// Lowercasing whitespace/punctuation tokenizer, hashed sub-word split for
/// out-of-vocabulary words, seeded embedding table, and a one-hidden-layer
/// scorer logits = W2 * mean_i tanh(W1 e_i + b1) + b2 trained on the lexicon.
class ToyClassifier : public SentimentClassifier {
 public:
  ToyClassifier(const std::vector<LexiconEntry>& lexicon, ToyClassifierOptions options = {});

  std::vector<Piece> tokenize(std::string_view text) const override;
  std::size_t dim() const override { return options_.dim; }
  Tensor embed(const std::vector<Piece>& pieces) const override;
  Var score(Tape& tape, Var embeddings) const override;

  /// Logits for a single word, for checking the trained classifier.
  std::vector<double> word_logits(std::string_view word) const;
  const ParameterStore& parameters() const noexcept { return store_; }
  const std::vector<double>& training_loss() const noexcept { return loss_; }

 private:
  std::vector<double> piece_embedding(const Piece& piece) const;
  std::vector<std::string> split_oov(const std::string& word) const;

  ToyClassifierOptions options_;
  std::unordered_map<std::string, std::vector<double>> table_;
  ParameterStore store_;
  LinearLayer hidden_;
  LinearLayer output_;
  std::vector<double> loss_;
};

/// Day files `YYYY-MM-DD.txt` in `dir`; articles are separated by blank lines.
std::map<Date, std::vector<std::string>> read_texts_dir(const std::filesystem::path& dir);

/// Keyword sets for every day of a corpus, in date order.
std::vector<KeywordSet> extract_corpus(const std::map<Date, std::vector<std::string>>& corpus,
                                       const SentimentClassifier& clf, std::size_t n, Pooling pooling,
                                       std::size_t jobs = 1);

}  // namespace iknet
