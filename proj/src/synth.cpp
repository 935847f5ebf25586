// SPDX-License-Identifier: Apache-2.0
#include "iknet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "iknet/rng.hpp"

namespace iknet {

namespace {

Date next_day(const Date& d) { return from_day_number(day_number(d) + 1); }

std::size_t weekdays_between(Date first, const Date& last) {
  std::size_t n = 0;
  for (; !(last < first); first = next_day(first)) n += is_weekend(first) ? 0 : 1;
  return n;
}

std::vector<double> random_vector(std::size_t n, Philox& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<std::string> pseudo_words(std::size_t count, const std::set<std::string>& taken, Philox& rng) {
  static constexpr std::string_view kSyllables[] = {"ka", "lo", "mi", "ren", "tor", "vex", "sul", "dan",
                                                    "por", "bri", "nel", "qua", "zo", "fin", "gar", "hu"};
  std::set<std::string> seen(taken);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    const std::size_t parts = 2 + rng.below(2);
    for (std::size_t i = 0; i < parts; ++i) w += kSyllables[rng.below(std::size(kSyllables))];
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

// k distinct indices from [0, n) in draw order.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Philox& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

std::vector<std::string> compose_articles(const std::vector<std::string>& words, std::size_t articles, Philox& rng) {
  static constexpr std::string_view kJoin[] = {"and", "with", "as", "after", "for"};
  std::vector<std::vector<std::string>> buckets(std::max<std::size_t>(articles, 1));
  for (std::size_t i = 0; i < words.size(); ++i) buckets[i % buckets.size()].push_back(words[i]);
  std::vector<std::string> out;
  for (auto& b : buckets) {
    if (b.empty()) continue;
    std::string text;
    for (std::size_t i = 0; i < b.size(); i += 3) {
      std::string sentence = "The " + b[i];
      for (std::size_t j = i + 1; j < std::min(b.size(), i + 3); ++j) {
        sentence += " " + std::string(kJoin[rng.below(std::size(kJoin))]) + " " + b[j];
      }
      text += (text.empty() ? "" : " ") + sentence + ".";
    }
    out.push_back(std::move(text));
  }
  return out;
}

}  // namespace

SynthOptions ten_year_options(std::uint64_t seed) {
  SynthOptions o;
  o.start = make_date(2014, 9, 1);
  o.trading_days = weekdays_between(o.start, make_date(2024, 12, 31));
  o.seed = seed;
  return o;
}

SynthOptions fixture_options(std::uint64_t seed) {
  SynthOptions o;
  o.start = make_date(2014, 11, 3);
  o.trading_days = 600;
  o.seed = seed;
  o.weekend_news = true;
  o.texts = true;
  return o;
}

SynthMarket generate_market(const std::vector<LexiconEntry>& lexicon, const SynthOptions& o) {
  if (o.keyword_dim < 2) throw ValidationError("synth: keyword_dim must be at least 2");
  if (o.trading_days < 60) throw ValidationError("synth: need at least 60 trading days");
  if (o.min_signal_words > o.max_signal_words || o.min_distractors > o.max_distractors) {
    throw ValidationError("synth: word count ranges are inverted");
  }
  Philox vocab_rng(Philox::derive(o.seed, "synth-vocabulary"));
  const std::size_t d = o.keyword_dim;

  // Signal words are the polar lexicon entries; distractors are the neutral
  // entries plus generated pseudo-words.
  std::vector<std::string> positive, negative, neutral;
  std::set<std::string> taken;
  for (const auto& e : lexicon) {
    taken.insert(e.word);
    (e.polarity == Polarity::positive ? positive : e.polarity == Polarity::negative ? negative : neutral).push_back(e.word);
  }
  if (positive.empty() || negative.empty()) throw ValidationError("synth: lexicon needs positive and negative words");

  std::vector<double> readout = random_vector(d - 1, vocab_rng);
  const double norm = std::sqrt(std::inner_product(readout.begin(), readout.end(), readout.begin(), 0.0));
  for (double& v : readout) v /= norm;

  SynthMarket market;
  const std::size_t n_signal = positive.size() + negative.size();
  std::vector<std::vector<double>> tails;
  for (std::size_t i = 0; i < n_signal; ++i) tails.push_back(random_vector(d - 1, vocab_rng));
  auto effect_of = [&](const std::vector<double>& tail) {
    return std::inner_product(tail.begin(), tail.end(), readout.begin(), 0.0);
  };
  std::sort(tails.begin(), tails.end(), [&](const auto& a, const auto& b) { return effect_of(a) < effect_of(b); });
  // Most negative effects go to negative words.
  std::vector<std::string> signal_words = negative;
  signal_words.insert(signal_words.end(), positive.begin(), positive.end());
  for (std::size_t i = 0; i < n_signal; ++i) {
    SynthWord w{signal_words[i], true, effect_of(tails[i]), {}};
    w.embedding.push_back(1.0 + o.flag_noise * vocab_rng.normal());
    w.embedding.insert(w.embedding.end(), tails[i].begin(), tails[i].end());
    market.vocabulary.push_back(std::move(w));
  }
  std::vector<std::string> distractors = neutral;
  if (distractors.size() < o.distractor_vocabulary) {
    const auto extra = pseudo_words(o.distractor_vocabulary - distractors.size(), taken, vocab_rng);
    distractors.insert(distractors.end(), extra.begin(), extra.end());
  }
  for (const auto& word : distractors) {
    SynthWord w{word, false, 0.0, {}};
    w.embedding.push_back(-1.0 + o.flag_noise * vocab_rng.normal());
    const auto tail = random_vector(d - 1, vocab_rng);
    w.embedding.insert(w.embedding.end(), tail.begin(), tail.end());
    market.vocabulary.push_back(std::move(w));
  }
  if (o.max_signal_words > n_signal || o.max_distractors > distractors.size()) {
    throw ValidationError("synth: vocabulary smaller than the per-day word count");
  }

  Philox day_rng(Philox::derive(o.seed, "synth-days"));
  Philox price_rng(Philox::derive(o.seed, "synth-prices"));
  const double mean_signal = 0.5 * static_cast<double>(o.min_signal_words + o.max_signal_words);
  const double shock_norm = o.shock_scale / std::sqrt(mean_signal);
  const double anchor = std::log(o.start_price);

  auto make_set = [&](const Date& date, const std::vector<std::size_t>& sig, const std::vector<std::size_t>& dis) {
    KeywordSet set;
    set.date = date;
    std::vector<std::string> words;
    for (std::size_t i : sig) {
      const SynthWord& w = market.vocabulary[i];
      const double s = 0.3 + 0.2 * std::min(std::abs(w.effect), 2.0) + 0.3 * day_rng.uniform();
      set.entries.push_back({w.word, s, w.embedding});
    }
    for (std::size_t i : dis) {
      const SynthWord& w = market.vocabulary[n_signal + i];
      set.entries.push_back({w.word, 0.72 * day_rng.uniform(), w.embedding});
    }
    for (const auto& e : set.entries) words.push_back(e.word);
    // Interleave so articles mix signal and distractor words.
    std::vector<std::string> shuffled = words;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[day_rng.below(i)]);
    sort_keywords(set.entries);
    if (o.texts) market.texts[date] = compose_articles(shuffled, o.articles_per_day, day_rng);
    set.articles = static_cast<int>(o.texts ? market.texts[date].size() : o.articles_per_day);
    return set;
  };

  std::vector<OhlcvBar> bars;
  std::vector<double> closes;
  double log_price = anchor;
  double last_return = 0.0;
  double pending_shock = 0.0;
  Date date = o.start;
  while (bars.size() < o.trading_days) {
    if (is_weekend(date)) {
      if (o.weekend_news && month_of(date) % 2 == 0 && day_rng.uniform() < 0.25) {
        market.keywords.push_back(make_set(date, {}, choose(distractors.size(), 3, day_rng)));
      }
      date = next_day(date);
      continue;
    }
    const std::size_t t = bars.size();
    double r = 0.0;
    if (t > 0) {
      double dev = 0.0;
      if (closes.size() >= 10) {
        const double sma10 = std::accumulate(closes.end() - 10, closes.end(), 0.0) / 10.0;
        dev = (closes.back() - sma10) / sma10;
      }
      r = -o.ar_reversion * dev + o.ar_momentum * last_return - o.anchor_pull * (log_price - anchor) + pending_shock +
          o.noise_sd * price_rng.normal();
    }
    const double prev_close = closes.empty() ? o.start_price : closes.back();
    log_price += r;
    const double close = std::exp(log_price);
    OhlcvBar bar;
    bar.date = date;
    bar.close = close;
    bar.open = prev_close * std::exp(0.3 * r + 0.002 * price_rng.normal());
    bar.high = std::max(bar.open, close) * std::exp(0.004 * std::abs(price_rng.normal()));
    bar.low = std::min(bar.open, close) * std::exp(-0.004 * std::abs(price_rng.normal()));
    bar.volume = std::round(1e6 * std::exp(0.25 * price_rng.normal() + 0.2 * std::abs(r) / o.shock_scale));
    bars.push_back(bar);
    closes.push_back(close);
    last_return = r;

    const std::size_t k = o.min_signal_words + day_rng.below(o.max_signal_words - o.min_signal_words + 1);
    const std::size_t m = o.min_distractors + day_rng.below(o.max_distractors - o.min_distractors + 1);
    const auto sig = choose(n_signal, k, day_rng);
    const auto dis = choose(distractors.size(), m, day_rng);
    double sum = 0.0;
    for (std::size_t i : sig) sum += market.vocabulary[i].effect;
    pending_shock = shock_norm * sum;
    market.shock.push_back(pending_shock);
    market.keywords.push_back(make_set(date, sig, dis));
    date = next_day(date);
  }
  market.bars = OhlcvSeries(std::move(bars));
  return market;
}

std::vector<std::filesystem::path> write_market(const std::filesystem::path& dir, const SynthMarket& market) {
  std::vector<std::filesystem::path> written{dir / "ohlcv.csv", dir / "keywords.jsonl"};
  std::filesystem::create_directories(dir);
  write_ohlcv_csv(written[0], market.bars);
  write_keywords_jsonl(written[1], market.keywords);
  if (!market.texts.empty()) {
    std::filesystem::create_directories(dir / "texts");
    for (const auto& [date, articles] : market.texts) {
      std::string body;
      for (const auto& a : articles) body += (body.empty() ? "" : "\n\n") + a;
      const auto path = dir / "texts" / (format_date(date) + ".txt");
      write_file(path, body + "\n");
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace iknet
