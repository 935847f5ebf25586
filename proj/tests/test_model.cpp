// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "iknet/model.hpp"
#include "reference_rnn.hpp"
#include "support.hpp"

using namespace iknet;
using namespace iknet::testing;

namespace {

// Same creation sequence as IknetModel, so parameter indices line up.
struct Mirror {
  ParameterStore store;
  LinearLayer proj, fusion, head1, head2;
  GruLayer gru;
  BiLstmStack lstm;
};

Mirror mirror(const IknetModel& m) {
  const auto& c = m.config();
  Mirror r;
  Philox rng(0);
  const std::size_t h = c.hidden;
  const bool bi = c.gru_mode == GruMode::bidirectional;
  r.proj = LinearLayer::create(r.store, "keyword_proj", c.keyword_dim, h, rng);
  r.gru = GruLayer::create(r.store, "gru", h, bi ? h : 2 * h, bi, rng);
  r.lstm = BiLstmStack::create(r.store, "lstm", c.features, h, c.lstm_layers, rng);
  r.fusion = LinearLayer::create(r.store, "fusion", 4 * h, 2 * h, rng);
  r.head1 = LinearLayer::create(r.store, "head.w1", 2 * h, 2 * h, rng);
  r.head2 = LinearLayer::create(r.store, "head.w2", 2 * h, 1, rng);
  REQUIRE(r.store.size() == m.parameters().size());
  for (std::size_t i = 0; i < r.store.size(); ++i) {
    REQUIRE(r.store.name(i) == m.parameters().name(i));
    r.store[i] = m.parameters()[i];
  }
  return r;
}

Vec ref_linear(const Mirror& m, const LinearLayer& l, const Vec& x, bool relu) {
  const Tensor& w = m.store[l.weight];
  const Tensor& b = m.store[l.bias];
  Vec out(l.out);
  for (std::size_t j = 0; j < l.out; ++j) {
    double s = b[j];
    for (std::size_t k = 0; k < l.in; ++k) s += w[j * l.in + k] * x[k];
    out[j] = relu ? std::max(0.0, s) : s;
  }
  return out;
}

double ref_forward(const IknetModel& model, const double* row) {
  const auto& c = model.config();
  const Mirror m = mirror(model);
  const std::size_t h2 = 2 * c.hidden;
  Vec news(h2, 0.0), price(h2, 0.0);
  if (c.variant != Variant::tech_only) {
    Seq ks;
    for (std::size_t i = 0; i < c.keyword_count; ++i) {
      ks.push_back(ref_linear(m, m.proj, Vec(row + i * c.keyword_dim, row + (i + 1) * c.keyword_dim), true));
    }
    news = ref_gru(ks, m.gru, m.store);
  }
  if (c.variant != Variant::keyword_only) {
    Seq xs;
    const double* tech = row + c.keyword_width();
    for (std::size_t t = 0; t < c.window; ++t) xs.emplace_back(tech + t * c.features, tech + (t + 1) * c.features);
    price = ref_bilstm(xs, m.lstm, m.store);
  }
  Vec combined = news;
  combined.insert(combined.end(), price.begin(), price.end());
  const Vec fused = ref_linear(m, m.fusion, combined, true);
  return ref_linear(m, m.head2, ref_linear(m, m.head1, fused, true), false)[0];
}

ModelConfig tiny(Variant v = Variant::full) {
  ModelConfig c;
  c.keyword_dim = 3;
  c.keyword_count = 4;
  c.window = 3;
  c.features = 4;
  c.hidden = 3;
  c.dropout = 0.0;
  c.variant = v;
  return c;
}

Tensor random_rows(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
  Philox rng(seed);
  return random_tensor({n, c.input_width()}, rng);
}

void zero_biases(ParameterStore& store, std::string_view prefix) {
  for (auto& e : store.entries()) {
    if (e.name.starts_with(prefix) && e.name.ends_with(".bias")) e.value.fill(0.0);
  }
}

Sample make_sample(const ModelConfig& c, Philox& rng, Date anchor) {
  Sample s;
  s.anchor_date = anchor;
  s.target_date = from_day_number(day_number(anchor) + 1);
  s.window = random_tensor({c.window, c.features}, rng, 90.0, 110.0);
  s.keywords = random_tensor({c.keyword_count, c.keyword_dim}, rng);
  s.keyword_count = c.keyword_count;
  s.words.assign(c.keyword_count, "w");
  s.target = 100.0 + rng.uniform(-5.0, 5.0);
  s.last_close = s.window[(c.window - 1) * c.features + kCloseFeature];
  return s;
}

}  // namespace

TEST_CASE("forward matches an independent composition of the layers") {
  for (auto mode : {GruMode::bidirectional, GruMode::unidirectional_2h}) {
    for (auto variant : {Variant::full, Variant::tech_only, Variant::keyword_only}) {
      ModelConfig c = tiny(variant);
      c.gru_mode = mode;
      IknetModel model(c, 11);
      Philox rng(13);
      for (auto& e : model.parameters().entries()) e.value = random_tensor(e.value.shape(), rng, -0.8, 0.8);
      const Tensor rows = random_rows(c, 3, 5);
      const auto out = model.predict_rows(rows);
      REQUIRE(out.size() == 3);
      for (std::size_t b = 0; b < 3; ++b) {
        CHECK(std::abs(out[b] - ref_forward(model, rows.data().data() + b * c.input_width())) < 1e-12);
      }
    }
  }
}

TEST_CASE("zero parameters give zero output") {
  IknetModel model(tiny(), 3);
  for (auto& e : model.parameters().entries()) e.value.fill(0.0);
  for (double y : model.predict_rows(random_rows(model.config(), 4, 1))) CHECK(y == 0.0);
}

TEST_CASE("zero keywords with zero biases reduce full to tech_only") {
  IknetModel full(tiny(Variant::full), 21);
  IknetModel tech(tiny(Variant::tech_only), 21);
  zero_biases(full.parameters(), "keyword_proj");
  zero_biases(full.parameters(), "gru");
  Tensor rows = random_rows(full.config(), 5, 2);
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t k = 0; k < full.config().keyword_width(); ++k) rows[b * rows.cols() + k] = 0.0;
  }
  const auto a = full.predict_rows(rows);
  const auto t = tech.predict_rows(rows);
  for (std::size_t b = 0; b < 5; ++b) CHECK(a[b] == doctest::Approx(t[b]).epsilon(1e-14));
}

TEST_CASE("zero padding under zero GRU biases") {
  Philox rng(8);
  const std::size_t h = 3;
  ParameterStore store;
  const GruLayer gru = GruLayer::create(store, "gru", 2, h, true, rng);
  zero_biases(store, "gru");
  auto run = [&](std::size_t pads) {
    Philox data(4);
    Tape tape(false);
    const auto bound = store.bind(tape, false);
    std::vector<Var> xs;
    for (int i = 0; i < 2; ++i) xs.push_back(tape.constant(random_tensor({1, 2}, data)));
    for (std::size_t i = 0; i < pads; ++i) xs.push_back(tape.constant(Tensor({1, 2})));
    return Tensor(gru_forward(xs, gru, bound).value());
  };
  const Tensor two = run(2), six = run(6);
  // The backward direction starts from zero state on the padded tail and stays there.
  for (std::size_t j = h; j < 2 * h; ++j) CHECK(two[j] == six[j]);
  // The forward direction keeps evolving through the recurrent weights.
  double diff = 0.0;
  for (std::size_t j = 0; j < h; ++j) diff += std::abs(two[j] - six[j]);
  CHECK(diff > 1e-6);

  SUBCASE("an all-padding keyword block is length independent") {
    ModelConfig c4 = tiny(), c9 = tiny();
    c9.keyword_count = 9;
    IknetModel m4(c4, 17), m9(c9, 17);
    zero_biases(m4.parameters(), "keyword_proj");
    zero_biases(m4.parameters(), "gru");
    for (std::size_t i = 0; i < m4.parameters().size(); ++i) m9.parameters()[i] = m4.parameters()[i];
    const Tensor tech = random_rows(tiny(Variant::tech_only), 1, 9);
    Tensor r4({1, c4.input_width()}), r9({1, c9.input_width()});
    const std::size_t tech_width = c4.window * c4.features;
    for (std::size_t k = 0; k < tech_width; ++k) {
      r4[c4.keyword_width() + k] = tech[tiny().keyword_width() + k];
      r9[c9.keyword_width() + k] = tech[tiny().keyword_width() + k];
    }
    CHECK(m4.predict_rows(r4)[0] == m9.predict_rows(r9)[0]);
  }
}

TEST_CASE("end-to-end parameter gradients match central differences") {
  for (auto variant : {Variant::full, Variant::tech_only, Variant::keyword_only}) {
    ModelConfig c = tiny(variant);
    c.hidden = 2;
    IknetModel model(c, 31);
    // Random biases keep every ReLU away from its kink at exactly zero.
    Philox init(32);
    for (auto& e : model.parameters().entries()) e.value = random_tensor(e.value.shape(), init, -0.8, 0.8);
    const Tensor rows = random_rows(c, 4, 6);
    const std::vector<double> targets{0.3, -0.7, 1.1, 0.05};
    const auto grads = loss_gradient(model, rows, targets);
    auto& store = model.parameters();
    double worst = 0.0;
    std::size_t checked = 0;
    constexpr double eps = 1e-5;
    for (std::size_t p = 0; p < store.size(); ++p) {
      for (std::size_t i = 0; i < store[p].size(); ++i) {
        const double saved = store[p][i];
        store[p][i] = saved + eps;
        const double up = loss_value(model, rows, targets);
        store[p][i] = saved - eps;
        const double down = loss_value(model, rows, targets);
        store[p][i] = saved;
        worst = std::max(worst, relative_error(grads[p][i], (up - down) / (2 * eps)));
        ++checked;
      }
    }
    INFO(to_string(variant), " checked ", checked);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("one sample is memorised and predicted back") {
  ModelConfig c = tiny();
  c.features = kFeatureCount;
  c.hidden = 8;
  Philox rng(2);
  const Sample s = make_sample(c, rng, make_date(2020, 3, 2));
  const std::vector<const Sample*> set{&s};
  const Scaler scaler = Scaler::fit(set, "one");
  IknetModel model(c, 1);
  model.scaler_tag = scaler.tag;
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.seed = 3;
  const auto result = train(model, make_inputs(set, scaler, c), tc);
  REQUIRE(result.epoch_loss.size() == 200);
  CHECK(result.epoch_loss.back() < 1e-4);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());
  const auto pred = predict(model, set, scaler);
  REQUIRE(pred.size() == 1);
  CHECK(std::abs(pred[0].forecast - s.target) < scaler.target_scale * 0.01);
  CHECK(pred[0].actual == s.target);
  CHECK(pred[0].date == s.target_date);
}

TEST_CASE("training is deterministic in the seed") {
  ModelConfig c = tiny();
  c.dropout = 0.1;
  const Tensor rows = random_rows(c, 20, 12);
  ModelInputs data{rows, {}};
  for (std::size_t i = 0; i < 20; ++i) data.targets.push_back(std::sin(static_cast<double>(i)));
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 6;
  tc.seed = 9;
  auto run = [&](std::uint64_t seed) {
    IknetModel m(c, 4);
    tc.seed = seed;
    const auto r = train(m, data, tc);
    return std::make_pair(m, r.epoch_loss);
  };
  const auto [a, la] = run(9);
  const auto [b, lb] = run(9);
  const auto [d, ld] = run(10);
  CHECK(la == lb);
  CHECK(la != ld);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(std::ranges::equal(a.parameters()[i].data(), b.parameters()[i].data()));
  }
}

TEST_CASE("tech_only matches full when keywords are noise") {
  ModelConfig c = tiny();
  c.hidden = 6;
  c.dropout = 0.0;
  Philox rng(77);
  auto make = [&](std::size_t n) {
    ModelInputs in{random_rows(c, n, rng.next_u64()), {}};
    for (std::size_t b = 0; b < n; ++b) {
      const double* tech = in.rows.data().data() + b * c.input_width() + c.keyword_width();
      double y = 0.0;
      for (std::size_t t = 0; t < c.window; ++t) y += 0.4 * tech[t * c.features] - 0.2 * tech[t * c.features + 1];
      in.targets.push_back(y);
    }
    return in;
  };
  const ModelInputs train_set = make(160), test_set = make(80);
  TrainConfig tc;
  tc.epochs = 60;
  tc.seed = 5;
  auto rmse = [&](Variant v) {
    ModelConfig cv = c;
    cv.variant = v;
    IknetModel m(cv, 8);
    const auto r = train(m, train_set, tc);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    const auto out = m.predict_rows(test_set.rows);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += (out[i] - test_set.targets[i]) * (out[i] - test_set.targets[i]);
    return std::sqrt(s / static_cast<double>(out.size()));
  };
  const double full = rmse(Variant::full), tech = rmse(Variant::tech_only);
  INFO("full ", full, " tech ", tech);
  CHECK(tech <= 1.1 * full);
}

TEST_CASE("predict edge cases and scaler checks") {
  ModelConfig c = tiny();
  c.features = kFeatureCount;
  Philox rng(5);
  const Sample s = make_sample(c, rng, make_date(2021, 6, 1));
  const std::vector<const Sample*> set{&s};
  Scaler scaler = Scaler::fit(set, "fold-1");
  IknetModel model(c, 2);
  model.scaler_tag = "fold-1";
  CHECK(predict(model, {}, scaler).empty());
  CHECK(std::isfinite(predict(model, set, scaler)[0].forecast));
  scaler.tag = "fold-2";
  CHECK_THROWS_AS(predict(model, set, scaler), ValidationError);

  ModelConfig wrong = c;
  wrong.keyword_dim = 5;
  CHECK_THROWS_AS(flat_row(s, scaler, wrong), DimensionError);
  CHECK_THROWS_AS(model.predict_rows(Tensor({1, 3})), DimensionError);
}

TEST_CASE("non-finite loss aborts training") {
  ModelConfig c = tiny();
  IknetModel model(c, 1);
  ModelInputs data{random_rows(c, 4, 3), {0.0, 1.0, 2.0, 3.0}};
  data.targets[2] = std::nan("");
  CHECK_THROWS_AS(train(model, data, TrainConfig{}), NumericError);
  CHECK_THROWS_AS(train(model, ModelInputs{Tensor({0, c.input_width()}), {}}, TrainConfig{}), ValidationError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ModelConfig c = tiny(Variant::keyword_only);
  c.gru_mode = GruMode::unidirectional_2h;
  c.features = kFeatureCount;
  Philox rng(4);
  const Sample s = make_sample(c, rng, make_date(2019, 1, 2));
  Checkpoint cp;
  cp.model = IknetModel(c, 99);
  cp.scaler = Scaler::fit({&s}, "fold-3");
  cp.model.scaler_tag = cp.scaler.tag;
  cp.fold = build_folds(2015, 3)[2];
  cp.train.seed = 1234567890123ULL;
  cp.train.learning_rate = 0.003;
  for (auto& e : cp.model.parameters().entries()) {
    for (double& v : e.value.data()) v = rng.uniform(-1, 1) * 1e-3 / 3.0;
  }
  const auto path = std::filesystem::temp_directory_path() / "iknet_test_ckpt" / "model.json";
  save_checkpoint(path, cp);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.model.config().variant == Variant::keyword_only);
  CHECK(back.model.config().gru_mode == GruMode::unidirectional_2h);
  CHECK(back.model.scaler_tag == "fold-3");
  CHECK(back.fold.label() == cp.fold.label());
  CHECK(back.train.seed == cp.train.seed);
  CHECK(back.train.learning_rate == cp.train.learning_rate);
  CHECK(back.scaler.to_json() == cp.scaler.to_json());
  for (std::size_t i = 0; i < cp.model.parameters().size(); ++i) {
    CHECK(std::ranges::equal(back.model.parameters()[i].data(), cp.model.parameters()[i].data()));
  }
  write_file(path, "{\"format\":\"other\"}");
  CHECK_THROWS_AS(load_checkpoint(path), ValidationError);
  std::filesystem::remove_all(path.parent_path());
  CHECK_THROWS_AS(load_checkpoint(path), MissingDataError);
}

TEST_CASE("config validation") {
  ModelConfig c = tiny();
  c.hidden = 0;
  CHECK_THROWS_AS(IknetModel(c, 1), ValidationError);
  c = tiny();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(parse_variant("tech_only") == Variant::tech_only);
  CHECK_THROWS_AS(parse_variant("both"), ValidationError);
  CHECK(parse_gru_mode("unidirectional_2h") == GruMode::unidirectional_2h);
}
