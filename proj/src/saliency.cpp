// SPDX-License-Identifier: Apache-2.0
#include "iknet/saliency.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <iterator>
#include <set>
#include <sstream>

#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "iknet/parallel.hpp"

namespace iknet {

std::vector<PieceSaliency> token_saliency(std::string_view text, const SentimentClassifier& clf) {
  const auto pieces = clf.tokenize(text);
  if (pieces.empty()) return {};
  Tape tape;
  const Var e = tape.leaf(clf.embed(pieces), true);
  const Var logits = clf.score(tape, e);
  const Tensor values = logits.value();
  std::size_t predicted = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[predicted]) predicted = c;
  }
  tape.backward(pick(logits, 0, predicted));
  const Tensor& g = e.grad();
  const std::size_t d = g.cols();
  std::vector<PieceSaliency> out;
  out.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += g[i * d + j] * g[i * d + j];
    out.push_back({pieces[i], std::sqrt(ss)});
  }
  return out;
}

namespace {

constexpr std::string_view kStopWords[] = {
    "a",    "about", "after", "all",  "also",  "an",    "and",   "any",  "are",   "as",    "at",   "be",  "been",
    "but",  "by",    "can",   "could", "did",  "do",    "does",  "for",  "from",  "had",   "has",  "have", "he",
    "her",  "his",   "i",     "if",   "in",    "into",  "is",    "it",   "its",   "more",  "most", "not", "of",
    "on",   "or",    "our",   "she",  "so",    "than",  "that",   "the",  "their", "them",  "then", "there", "these",
    "they", "this",  "to",    "was",  "we",    "were",  "which", "while", "will",  "with",  "would", "you"};

bool is_punctuation(std::string_view word) {
  return std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::ispunct(c) != 0; });
}

}  // namespace

bool is_stop_word(std::string_view word) {
  return std::find(std::begin(kStopWords), std::end(kStopWords), word) != std::end(kStopWords);
}

std::vector<WordSaliency> merge_subwords(const std::vector<PieceSaliency>& pieces) {
  std::vector<WordSaliency> out;
  std::string word;
  double total = 0.0;
  std::size_t count = 0;
  auto flush = [&] {
    if (count > 0 && !word.empty() && !is_stop_word(word) && !is_punctuation(word)) {
      out.push_back({word, total / static_cast<double>(count)});
    }
    word.clear();
    total = 0.0;
    count = 0;
  };
  for (const auto& p : pieces) {
    if (!p.piece.continuation) flush();
    word += p.piece.text;
    total += p.saliency;
    ++count;
  }
  flush();
  return out;
}

Pooling parse_pooling(std::string_view name) {
  if (name == "max") return Pooling::max;
  if (name == "mean") return Pooling::mean;
  throw ValidationError("pool must be 'max' or 'mean', got '" + std::string(name) + "'");
}

std::vector<double> embed_word(std::string_view word, const SentimentClassifier& clf) {
  const auto pieces = clf.tokenize(word);
  std::vector<double> out(clf.dim(), 0.0);
  if (pieces.empty()) return out;
  const Tensor e = clf.embed(pieces);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += e[i * out.size() + j];
  }
  for (double& v : out) v /= static_cast<double>(pieces.size());
  return out;
}

KeywordSet extract_keywords(const std::vector<std::string>& articles, const SentimentClassifier& clf, std::size_t n,
                            Pooling pooling, Date date) {
  if (n == 0) throw ValidationError("keyword count n must be >= 1");
  struct Acc {
    double max = 0.0;
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> pooled;
  for (const auto& article : articles) {
    for (const auto& w : merge_subwords(token_saliency(article, clf))) {
      Acc& a = pooled[w.word];
      a.max = a.count == 0 ? w.saliency : std::max(a.max, w.saliency);
      a.sum += w.saliency;
      ++a.count;
    }
  }
  std::vector<Keyword> ranked;
  ranked.reserve(pooled.size());
  for (const auto& [word, a] : pooled) {
    ranked.push_back({word, pooling == Pooling::max ? a.max : a.sum / static_cast<double>(a.count), {}});
  }
  sort_keywords(ranked);
  if (ranked.size() > n) ranked.resize(n);
  for (auto& k : ranked) k.embedding = embed_word(k.word, clf);
  return KeywordSet{date, static_cast<int>(articles.size()), std::move(ranked)};
}

std::vector<LexiconEntry> read_lexicon(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.header != std::vector<std::string>{"word", "polarity"}) {
    throw ValidationError(path.string() + ": header must be word,polarity");
  }
  std::vector<LexiconEntry> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    Polarity p;
    if (f[1] == "pos") {
      p = Polarity::positive;
    } else if (f[1] == "neg") {
      p = Polarity::negative;
    } else if (f[1] == "neu") {
      p = Polarity::neutral;
    } else {
      throw ValidationError(path.string() + ":" + std::to_string(table.lines[r]) + ": polarity must be pos, neg, or neu");
    }
    std::string word = f[0];
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    out.push_back({word, p});
  }
  return out;
}

namespace {

std::vector<double> seeded_vector(std::uint64_t seed, std::string_view label, std::size_t dim) {
  Philox rng(Philox::derive(seed, label));
  std::vector<double> v(dim);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

ToyClassifier::ToyClassifier(const std::vector<LexiconEntry>& lexicon, ToyClassifierOptions options)
    : options_(options) {
  if (lexicon.empty()) throw ValidationError("toy classifier needs a non-empty lexicon");
  if (options_.dim == 0 || options_.hidden == 0) throw ValidationError("classifier dims must be positive");
  for (const auto& e : lexicon) table_.emplace(e.word, seeded_vector(options_.seed, "vocab:" + e.word, options_.dim));
  for (auto w : kStopWords) table_.emplace(std::string(w), seeded_vector(options_.seed, "vocab:" + std::string(w), options_.dim));

  Philox rng(Philox::derive(options_.seed, "toy-classifier"));
  hidden_ = LinearLayer::create(store_, "clf.hidden", options_.dim, options_.hidden, rng);
  output_ = LinearLayer::create(store_, "clf.output", options_.hidden, 3, rng);

  // Rows are single-word inputs, so mean-over-pieces is the identity here.
  const std::size_t N = lexicon.size(), d = options_.dim;
  Tensor x({N, d});
  std::vector<std::size_t> labels(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& v = table_.at(lexicon[i].word);
    std::copy(v.begin(), v.end(), x.data().begin() + static_cast<long>(i * d));
    labels[i] = static_cast<std::size_t>(lexicon[i].polarity);
  }
  AdamState adam;
  adam.learning_rate = options_.learning_rate;
  for (std::size_t epoch = 0; epoch < options_.epochs; ++epoch) {
    Tape tape;
    auto bound = store_.bind(tape, true);
    const Var input = tape.constant(x);
    const Var logits = output_(bound, tanh(hidden_(bound, input)));
    const Var loss = softmax_cross_entropy(logits, labels);
    loss_.push_back(loss.value().item());
    tape.backward(loss);
    adam_step(store_, ParameterStore::gradients(bound), adam);
  }
}

std::vector<std::string> ToyClassifier::split_oov(const std::string& word) const {
  std::vector<std::string> parts;
  std::uint64_t h = fnv1a(word);
  std::size_t pos = 0;
  while (word.size() - pos > 4) {
    const std::size_t rem = word.size() - pos;
    const std::size_t cut = 2 + static_cast<std::size_t>(h % (rem - 3));
    parts.push_back(word.substr(pos, cut));
    pos += cut;
    h = (h >> 8) | (h << 56);
  }
  parts.push_back(word.substr(pos));
  return parts;
}

std::vector<Piece> ToyClassifier::tokenize(std::string_view text) const {
  std::vector<Piece> out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (table_.count(word)) {
      out.push_back({word, false});
    } else {
      const auto parts = split_oov(word);
      for (std::size_t i = 0; i < parts.size(); ++i) out.push_back({parts[i], i > 0});
    }
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word += static_cast<char>(std::tolower(c));
    } else {
      flush();
      if (std::ispunct(c)) out.push_back({std::string(1, static_cast<char>(c)), false});
    }
  }
  flush();
  return out;
}

std::vector<double> ToyClassifier::piece_embedding(const Piece& piece) const {
  if (!piece.continuation) {
    auto it = table_.find(piece.text);
    if (it != table_.end()) return it->second;
  }
  return seeded_vector(options_.seed, "piece:" + piece.display(), options_.dim);
}

Tensor ToyClassifier::embed(const std::vector<Piece>& pieces) const {
  Tensor e({pieces.size(), options_.dim});
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto v = piece_embedding(pieces[i]);
    std::copy(v.begin(), v.end(), e.data().begin() + static_cast<long>(i * options_.dim));
  }
  return e;
}

Var ToyClassifier::score(Tape& tape, Var embeddings) const {
  auto bound = store_.bind(tape, false);
  const Var h = tanh(hidden_(bound, embeddings));
  return output_(bound, mean_rows(h));
}

std::vector<double> ToyClassifier::word_logits(std::string_view word) const {
  Tape tape(false);
  const Var logits = score(tape, tape.constant(embed(tokenize(word))));
  const auto& v = logits.value();
  return {v.data().begin(), v.data().end()};
}

std::map<Date, std::vector<std::string>> read_texts_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingDataError("texts directory '" + dir.string() + "' not found");
  std::map<Date, std::vector<std::string>> corpus;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const Date date = parse_date(entry.path().stem().string());
    std::vector<std::string> articles;
    std::istringstream in(read_file(entry.path()));
    std::string line, current;
    while (std::getline(in, line)) {
      if (trim(line).empty()) {
        if (!current.empty()) articles.push_back(std::move(current));
        current.clear();
      } else {
        if (!current.empty()) current += ' ';
        current += trim(line);
      }
    }
    if (!current.empty()) articles.push_back(std::move(current));
    corpus.emplace(date, std::move(articles));
  }
  return corpus;
}

std::vector<KeywordSet> extract_corpus(const std::map<Date, std::vector<std::string>>& corpus,
                                       const SentimentClassifier& clf, std::size_t n, Pooling pooling,
                                       std::size_t jobs) {
  std::vector<const std::pair<const Date, std::vector<std::string>>*> days;
  for (const auto& kv : corpus) days.push_back(&kv);
  std::vector<KeywordSet> out(days.size());
  parallel_for(days.size(), jobs, [&](std::size_t i) {
    out[i] = extract_keywords(days[i]->second, clf, n, pooling, days[i]->first);
  });
  return out;
}

}  // namespace iknet
