// SPDX-License-Identifier: Apache-2.0
#include "iknet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <set>

#include "iknet/error.hpp"

namespace iknet {

using nlohmann::json;

std::vector<std::optional<KeywordSet>> align_keywords(const std::vector<KeywordSet>& days,
                                                      const std::vector<Date>& calendar, AlignmentReport* report) {
  AlignmentReport local;
  std::vector<std::vector<const KeywordSet*>> buckets(calendar.size());
  for (const auto& day : days) {
    auto it = std::lower_bound(calendar.begin(), calendar.end(), day.date);
    if (it == calendar.end()) {
      ++local.dropped;
      continue;
    }
    if (*it != day.date) ++local.shifted;
    ++local.attached;
    buckets[static_cast<std::size_t>(it - calendar.begin())].push_back(&day);
  }
  std::vector<std::optional<KeywordSet>> out(calendar.size());
  for (std::size_t i = 0; i < calendar.size(); ++i) {
    if (buckets[i].empty()) continue;
    if (buckets[i].size() == 1) {
      out[i] = *buckets[i].front();
      out[i]->date = calendar[i];
    } else {
      ++local.merged_days;
      out[i] = merge_keyword_sets(buckets[i], calendar[i]);
    }
  }
  if (report) *report = local;
  return out;
}

std::vector<Sample> assemble_samples(const IndicatorFrame& frame,
                                     const std::vector<std::optional<KeywordSet>>& keywords,
                                     const SampleOptions& options) {
  const std::size_t T = options.window, n = options.keyword_count, d = options.keyword_dim;
  if (T == 0 || n == 0 || d == 0) throw ValidationError("window, keyword count, and keyword dim must be positive");
  if (keywords.size() != frame.size()) throw DimensionError("keyword alignment does not match the indicator frame");
  std::vector<Sample> out;
  if (frame.size() < T + 1) return out;
  for (std::size_t t = T - 1; t + 1 < frame.size(); ++t) {
    bool ok = true;
    for (std::size_t j = t + 1 - T; j <= t && ok; ++j) ok = frame.valid[j];
    if (!ok) continue;
    Sample s;
    s.anchor_index = t;
    s.anchor_date = frame.dates[t];
    s.target_date = frame.dates[t + 1];
    s.window = Tensor({T, kFeatureCount});
    for (std::size_t r = 0; r < T; ++r) {
      const auto& row = frame.rows[t + 1 - T + r];
      std::copy(row.begin(), row.end(), s.window.data().begin() + static_cast<long>(r * kFeatureCount));
    }
    s.keywords = Tensor({n, d});
    s.words.assign(n, "");
    if (keywords[t]) {
      const auto& entries = keywords[t]->entries;
      s.keyword_count = std::min(n, entries.size());
      for (std::size_t i = 0; i < s.keyword_count; ++i) {
        if (entries[i].embedding.size() != d) {
          throw DimensionError("keyword '" + entries[i].word + "' on " + format_date(frame.dates[t]) + " has dim " +
                               std::to_string(entries[i].embedding.size()) + ", expected " + std::to_string(d));
        }
        std::copy(entries[i].embedding.begin(), entries[i].embedding.end(),
                  s.keywords.data().begin() + static_cast<long>(i * d));
        s.words[i] = entries[i].word;
      }
    }
    s.target = frame.rows[t + 1][kCloseFeature];
    s.last_close = frame.rows[t][kCloseFeature];
    out.push_back(std::move(s));
  }
  return out;
}

Scaler Scaler::fit(const std::vector<const Sample*>& train, std::string tag) {
  if (train.empty()) throw ValidationError("cannot fit a scaler on an empty training split");
  const std::size_t T = train.front()->window.rows();
  // Distinct frame rows: overlapping windows would otherwise overweight the middle of the split.
  std::vector<std::pair<std::size_t, const double*>> rows;
  std::set<std::size_t> seen;
  for (const Sample* s : train) {
    for (std::size_t r = 0; r < T; ++r) {
      const std::size_t idx = s->anchor_index + 1 - T + r;
      if (seen.insert(idx).second) rows.emplace_back(idx, s->window.data().data() + r * kFeatureCount);
    }
  }
  std::sort(rows.begin(), rows.end());
  Scaler sc;
  sc.tag = std::move(tag);
  const double count = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double mean = 0.0;
    for (const auto& [_, row] : rows) mean += row[j];
    mean /= count;
    double ss = 0.0;
    for (const auto& [_, row] : rows) ss += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(ss / count);
    sc.mean[j] = mean;
    sc.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  double mean = 0.0;
  for (const Sample* s : train) mean += s->target;
  mean /= static_cast<double>(train.size());
  double ss = 0.0;
  for (const Sample* s : train) ss += (s->target - mean) * (s->target - mean);
  const double sd = std::sqrt(ss / static_cast<double>(train.size()));
  sc.target_mean = mean;
  sc.target_scale = sd > 0.0 ? sd : 1.0;
  return sc;
}

Tensor Scaler::transform_window(const Tensor& window) const {
  if (window.cols() != kFeatureCount) throw DimensionError("window must have " + std::to_string(kFeatureCount) + " columns");
  Tensor out = window;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t j = i % kFeatureCount;
    out[i] = (out[i] - mean[j]) / scale[j];
  }
  return out;
}

Tensor Scaler::invert_window(const Tensor& scaled) const {
  Tensor out = scaled;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t j = i % kFeatureCount;
    out[i] = out[i] * scale[j] + mean[j];
  }
  return out;
}

std::string Scaler::to_json() const {
  json j;
  j["mean"] = mean;
  j["scale"] = scale;
  j["target_mean"] = target_mean;
  j["target_scale"] = target_scale;
  j["tag"] = tag;
  return j.dump();
}

Scaler Scaler::from_json(const std::string& text) {
  const json j = json::parse(text);
  Scaler sc;
  sc.mean = j.at("mean").get<std::array<double, kFeatureCount>>();
  sc.scale = j.at("scale").get<std::array<double, kFeatureCount>>();
  sc.target_mean = j.at("target_mean").get<double>();
  sc.target_scale = j.at("target_scale").get<double>();
  sc.tag = j.at("tag").get<std::string>();
  return sc;
}

namespace {

Date month_start(int month_index) { return make_date(month_index / 12, static_cast<unsigned>(month_index % 12 + 1), 1); }

Date month_end(int month_index) {
  const std::chrono::year_month_day_last last{std::chrono::year{month_index / 12},
                                              std::chrono::month_day_last{std::chrono::month{
                                                  static_cast<unsigned>(month_index % 12 + 1)}}};
  return Date{last};
}

std::string month_label(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year_of(d), month_of(d));
  return buf;
}

bool whole_years(const Period& p) { return month_of(p.start) == 1 && month_of(p.end) == 12; }

}  // namespace

std::string Period::label() const {
  if (whole_years(*this)) {
    return year_of(start) == year_of(end) ? std::to_string(year_of(start))
                                          : std::to_string(year_of(start)) + "-" + std::to_string(year_of(end));
  }
  return month_label(start) + ".." + month_label(end);
}

std::string FoldSpec::label() const { return train.label() + "->" + test.label(); }

std::vector<FoldSpec> build_folds(int first_train_year, int n_folds, int period_months, int first_month) {
  if (n_folds < 1) throw ValidationError("n_folds must be >= 1");
  if (period_months < 1) throw ValidationError("period_months must be >= 1");
  if (first_month < 1 || first_month > 12) throw ValidationError("first_month must be in 1..12");
  std::vector<FoldSpec> folds;
  const int base = first_train_year * 12 + first_month - 1;
  for (int i = 0; i < n_folds; ++i) {
    const int s = base + i * period_months;
    FoldSpec f;
    f.index = i + 1;
    f.period_months = period_months;
    f.train = {month_start(s), month_end(s + 3 * period_months - 1)};
    f.test = {month_start(s + 3 * period_months), month_end(s + 4 * period_months - 1)};
    folds.push_back(f);
  }
  return folds;
}

void check_coverage(const std::vector<FoldSpec>& folds, const std::vector<Date>& calendar) {
  auto has_days = [&](const Date& a, const Date& b) {
    auto it = std::lower_bound(calendar.begin(), calendar.end(), a);
    return it != calendar.end() && !(b < *it);
  };
  for (const auto& f : folds) {
    const int p = f.period_months;
    const int base = year_of(f.train.start) * 12 + month_of(f.train.start) - 1;
    for (int k = 0; k < 4; ++k) {
      const Period period{month_start(base + k * p), month_end(base + (k + 1) * p - 1)};
      if (!has_days(period.start, period.end)) {
        throw MissingDataError("fold " + std::to_string(f.index) + " (" + f.label() + "): no trading days in " +
                               period.label());
      }
    }
  }
}

FoldSplit split_samples(const std::vector<Sample>& samples, const FoldSpec& fold) {
  FoldSplit split;
  for (const auto& s : samples) {
    if (fold.train.contains(s.target_date)) split.train.push_back(&s);
    if (fold.test.contains(s.target_date)) split.test.push_back(&s);
  }
  return split;
}

void AuditLog::record_training(const FoldSpec& fold, const std::vector<const Sample*>& train,
                               const std::vector<Date>& calendar, std::size_t window) {
  std::set<long> indicator_days, keyword_days, target_days;
  for (const Sample* s : train) {
    for (std::size_t r = 0; r < window; ++r) indicator_days.insert(day_number(calendar[s->anchor_index + 1 - window + r]));
    if (s->keyword_count > 0) keyword_days.insert(day_number(s->anchor_date));
    target_days.insert(day_number(s->target_date));
  }
  auto emit = [&](const char* kind, const std::set<long>& days) {
    for (long d : days) {
      lines.push_back("fold=" + std::to_string(fold.index) + " stage=train kind=" + kind + " date=" +
                      format_date(from_day_number(d)));
    }
  };
  emit("indicator", indicator_days);
  emit("keywords", keyword_days);
  emit("target", target_days);
}

void AuditLog::record_test(const FoldSpec& fold, const std::vector<const Sample*>& test) {
  for (const Sample* s : test) {
    lines.push_back("fold=" + std::to_string(fold.index) + " stage=test kind=target date=" +
                    format_date(s->target_date));
  }
}

std::string AuditLog::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace iknet
