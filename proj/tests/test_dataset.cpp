// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "iknet/dataset.hpp"
#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "market.hpp"

using namespace iknet;
using namespace iknet::testing;

namespace {

IndicatorFrame all_valid(const OhlcvSeries& series) {
  auto frame = compute_indicators(series);
  for (std::size_t t = 0; t < frame.size(); ++t) {
    for (double& v : frame.rows[t]) {
      if (std::isnan(v)) v = 0.0;
    }
    frame.valid[t] = true;
  }
  return frame;
}

Keyword kw(std::string word, double s, std::size_t d = 3) { return {std::move(word), s, std::vector<double>(d, s)}; }

}  // namespace

TEST_CASE("build_folds examples") {
  const auto folds = build_folds(2015, 7);
  REQUIRE(folds.size() == 7);
  CHECK(folds[0].label() == "2015-2017->2018");
  CHECK(folds[6].label() == "2021-2023->2024");
  CHECK(folds[6].train.start == make_date(2021, 1, 1));
  CHECK(folds[6].test.end == make_date(2024, 12, 31));

  const auto one = build_folds(2015, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].label() == "2015-2017->2018");

  const auto two = build_folds(2016, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].label() == "2016-2018->2019");
  CHECK(two[1].label() == "2017-2019->2020");

  const auto quarterly = build_folds(2020, 2, 3);
  CHECK(quarterly[0].train.start == make_date(2020, 1, 1));
  CHECK(quarterly[0].train.end == make_date(2020, 9, 30));
  CHECK(quarterly[0].test.start == make_date(2020, 10, 1));
  CHECK(quarterly[1].test.end == make_date(2021, 3, 31));
  CHECK_THROWS_AS(build_folds(2015, 0), ValidationError);
}

TEST_CASE("coverage errors name the missing period") {
  const auto calendar = weekdays(make_date(2015, 1, 1), 252 * 3);  // ~2015-2017
  CHECK_NOTHROW(check_coverage(build_folds(2015, 1, 6), calendar));
  try {
    check_coverage(build_folds(2015, 1), calendar);
    FAIL("expected MissingDataError");
  } catch (const MissingDataError& e) {
    CHECK(std::string(e.what()).find("2018") != std::string::npos);
  }
}

TEST_CASE("assemble_samples") {
  const auto series = random_ohlcv(12, 1);
  const auto frame = all_valid(series);
  const std::vector<std::optional<KeywordSet>> none(12);
  SampleOptions opt;
  opt.window = 10;
  opt.keyword_count = 4;
  opt.keyword_dim = 3;
  const auto samples = assemble_samples(frame, none, opt);
  // Anchors on days 10 and 11; day 12 has no next-day target.
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].anchor_index == 9);
  CHECK(samples[1].target == series[11].close);
  CHECK(samples[1].last_close == series[10].close);
  for (const auto& s : samples) {
    CHECK(s.keyword_count == 0);
    CHECK(s.keywords == Tensor({4, 3}));
    CHECK(s.anchor_date != series.bars().back().date);
    CHECK(s.window.at(9, kCloseFeature) == s.last_close);
  }

  std::vector<std::optional<KeywordSet>> some(12);
  some[10] = KeywordSet{series[10].date, 2, {kw("rally", 0.9), kw("oil", 0.5)}};
  const auto with = assemble_samples(frame, some, opt);
  CHECK(with[1].keyword_count == 2);
  CHECK(with[1].words[0] == "rally");
  CHECK(with[1].keywords.at(1, 0) == 0.5);
  CHECK(with[1].keywords.at(2, 0) == 0.0);

  some[10]->entries = {kw("a", 5), kw("b", 4), kw("c", 3), kw("d", 2), kw("e", 1)};
  CHECK(assemble_samples(frame, some, opt)[1].keyword_count == 4);
  some[10]->entries = {kw("x", 1, 5)};
  CHECK_THROWS_AS(assemble_samples(frame, some, opt), DimensionError);
}

TEST_CASE("warm-up rows never enter a window") {
  const auto series = random_ohlcv(60, 2);
  const auto frame = compute_indicators(series);
  const auto samples = assemble_samples(frame, std::vector<std::optional<KeywordSet>>(60), SampleOptions{});
  REQUIRE(!samples.empty());
  CHECK(samples.front().anchor_index == kWarmupRows + 9);
  for (const auto& s : samples) {
    for (double v : s.window.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("scaler") {
  const auto series = random_ohlcv(300, 3);
  auto frame = compute_indicators(series);
  const auto samples = assemble_samples(frame, std::vector<std::optional<KeywordSet>>(300), SampleOptions{});
  std::vector<const Sample*> train;
  for (const auto& s : samples) train.push_back(&s);
  const Scaler sc = Scaler::fit(train, "t");

  // Column statistics over the distinct rows covered by the windows.
  std::vector<std::size_t> rows;
  for (std::size_t t = samples.front().anchor_index - 9; t <= samples.back().anchor_index; ++t) rows.push_back(t);
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double mean = 0, sq = 0;
    for (auto t : rows) {
      const double z = (frame.rows[t][j] - sc.mean[j]) / sc.scale[j];
      mean += z;
      sq += z * z;
    }
    mean /= rows.size();
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::sqrt(sq / rows.size() - mean * mean) == doctest::Approx(1.0).epsilon(1e-9));
  }

  for (double y : {0.0, 1234.5, -7.25, 1e6}) CHECK(std::abs(sc.invert_target(sc.transform_target(y)) - y) <= 1e-12 * std::max(1.0, std::abs(y)));
  const Tensor w = samples[5].window;
  const Tensor back = sc.invert_window(sc.transform_window(w));
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(back[i] - w[i]) <= 1e-12 * std::max(1.0, std::abs(w[i])));

  const Scaler round = Scaler::from_json(sc.to_json());
  CHECK(round.mean == sc.mean);
  CHECK(round.scale == sc.scale);
  CHECK(round.target_scale == sc.target_scale);
  CHECK(round.tag == "t");

  CHECK_THROWS_AS(Scaler::fit({}, "empty"), ValidationError);
}

TEST_CASE("constant feature gets unit scale") {
  const auto series = flat_bars(std::vector<double>(80, 50.0));
  const auto samples = assemble_samples(compute_indicators(series), std::vector<std::optional<KeywordSet>>(80),
                                        SampleOptions{});
  std::vector<const Sample*> train;
  for (const auto& s : samples) train.push_back(&s);
  const Scaler sc = Scaler::fit(train, "flat");
  CHECK(sc.scale[kCloseFeature] == 1.0);
  CHECK(sc.target_scale == 1.0);
  const Tensor z = sc.transform_window(samples[0].window);
  for (std::size_t r = 0; r < z.rows(); ++r) CHECK(z.at(r, kCloseFeature) == 0.0);
}

TEST_CASE("keyword alignment to the trading calendar") {
  const std::vector<Date> cal{make_date(2024, 3, 1), make_date(2024, 3, 4), make_date(2024, 3, 5)};  // Fri, Mon, Tue
  std::vector<KeywordSet> days{
      {make_date(2024, 3, 1), 1, {kw("fed", 0.3)}},
      {make_date(2024, 3, 2), 2, {kw("growth", 0.2), kw("jobs", 0.1)}},
      {make_date(2024, 3, 3), 1, {kw("growth", 0.5)}},
      {make_date(2024, 3, 4), 1, {kw("chips", 0.4)}},
      {make_date(2024, 3, 9), 1, {kw("late", 0.4)}},
  };
  AlignmentReport rep;
  const auto aligned = align_keywords(days, cal, &rep);
  CHECK(rep.attached == 4);
  CHECK(rep.shifted == 2);
  CHECK(rep.dropped == 1);
  CHECK(rep.merged_days == 1);
  REQUIRE(aligned[1]);
  const auto& mon = *aligned[1];
  CHECK(mon.date == cal[1]);
  CHECK(mon.articles == 4);
  REQUIRE(mon.entries.size() == 3);
  CHECK(mon.entries[0].word == "growth");
  CHECK(mon.entries[0].saliency == 0.5);
  CHECK(mon.entries[1].word == "chips");
  CHECK_FALSE(aligned[2]);
}

TEST_CASE("keyword jsonl schema") {
  const auto dir = std::filesystem::temp_directory_path() / "iknet_test_keywords";
  std::vector<KeywordSet> days{{make_date(2024, 1, 2), 2, {kw("rally", 0.75), kw("oil", 0.25)}},
                               {make_date(2024, 1, 3), 0, {}}};
  write_keywords_jsonl(dir / "k.jsonl", days);
  CHECK(validate_keywords_jsonl(dir / "k.jsonl").empty());
  const auto file = read_keywords_jsonl(dir / "k.jsonl");
  REQUIRE(file.days.size() == 2);
  CHECK(file.dim == 3u);
  CHECK(file.days[0].entries[1].word == "oil");
  CHECK(file.days[0].entries[1].embedding == std::vector<double>(3, 0.25));
  CHECK(file.days[1].entries.empty());

  auto issues_for = [&](const std::string& text) {
    write_file(dir / "bad.jsonl", text);
    return validate_keywords_jsonl(dir / "bad.jsonl");
  };
  const std::string good = R"({"date":"2024-01-02","articles":1,"keywords":[{"word":"a","saliency":0.5,"embedding":[1,2]}]})";
  CHECK(issues_for(good + "\n").empty());
  CHECK_FALSE(issues_for(good + "\n" + R"({"date":"2024-01-03","articles":1,"keywords":[{"word":"a","saliency":0.5,"embedding":[1]}]})").empty());
  CHECK_FALSE(issues_for(R"({"date":"2024-01-02","articles":1,"keywords":[{"word":"a","saliency":0.1,"embedding":[1]},{"word":"b","saliency":0.5,"embedding":[1]}]})").empty());
  CHECK_FALSE(issues_for(R"({"date":"2024-01-02","articles":1,"extra":1,"keywords":[]})").empty());
  CHECK_FALSE(issues_for(R"({"date":"2024-01-02","articles":1,"keywords":[{"word":"a","saliency":-1,"embedding":[1]}]})").empty());
  CHECK_FALSE(issues_for(R"({"date":"2024-02-30","articles":1,"keywords":[]})").empty());
  CHECK_FALSE(issues_for(good + "\n" + good).empty());  // dates must increase
  CHECK_FALSE(issues_for("{not json").empty());
  CHECK_THROWS_AS(read_keywords_jsonl(dir / "bad.jsonl"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fold split has no temporal leakage and the audit log proves it") {
  const auto series = random_ohlcv(252 * 5, 8, make_date(2015, 1, 1));
  const auto frame = compute_indicators(series);
  const auto samples = assemble_samples(frame, std::vector<std::optional<KeywordSet>>(frame.size()), SampleOptions{});
  const auto folds = build_folds(2015, 2, 12);
  check_coverage(folds, frame.dates);
  for (const auto& fold : folds) {
    const auto split = split_samples(samples, fold);
    REQUIRE(!split.train.empty());
    REQUIRE(!split.test.empty());
    CHECK(split.train.back()->target_date < split.test.front()->target_date);

    AuditLog log;
    log.record_training(fold, split.train, frame.dates, 10);
    log.record_test(fold, split.test);
    const std::string text = log.text();
    const std::string test_start = format_date(fold.test.start);
    std::size_t train_lines = 0;
    for (const auto& line : log.lines) {
      if (line.find("stage=train") == std::string::npos) continue;
      ++train_lines;
      const std::string date = line.substr(line.rfind('=') + 1);
      CHECK(date < test_start);
    }
    CHECK(train_lines > 0);
    CHECK(text.size() > 0);
  }
}
