// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iknet/error.hpp"
#include "iknet/nn.hpp"
#include "reference_rnn.hpp"
#include "support.hpp"

using namespace iknet;
using namespace iknet::testing;

namespace {

Seq random_seq(std::size_t n, std::size_t dim, Philox& rng) {
  Seq s(n, Vec(dim));
  for (auto& v : s)
    for (auto& x : v) x = rng.uniform(-1, 1);
  return s;
}

std::vector<Var> as_vars(Tape& tape, const Seq& seq) {
  std::vector<Var> out;
  for (const auto& v : seq) out.push_back(tape.constant(Tensor({1, v.size()}, v)));
  return out;
}

void randomize(ParameterStore& store, Philox& rng) {
  for (auto& e : store.entries())
    for (double& v : e.value.data()) v = rng.uniform(-1, 1);
}

Vec run_gru(const Seq& xs, const GruLayer& layer, const ParameterStore& store) {
  Tape tape(false);
  auto bound = store.bind(tape, false);
  auto inputs = as_vars(tape, xs);
  const auto out = gru_forward(inputs, layer, bound).value();
  return {out.data().begin(), out.data().end()};
}

Vec run_lstm(const Seq& xs, const BiLstmStack& stack, const ParameterStore& store) {
  Tape tape(false);
  auto bound = store.bind(tape, false);
  auto inputs = as_vars(tape, xs);
  const auto out = bilstm_encode(inputs, stack, bound).value();
  return {out.data().begin(), out.data().end()};
}

double max_abs_diff(const Vec& a, const Vec& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("gru with zero parameters stays at zero") {
  ParameterStore store;
  Philox rng(1);
  auto layer = GruLayer::create(store, "gru", 3, 4, true, rng);
  for (auto& e : store.entries()) e.value.fill(0.0);
  Philox data(2);
  const Vec out = run_gru(random_seq(5, 3, data), layer, store);
  CHECK(out == Vec(8, 0.0));
}

TEST_CASE("gru on a single step gives identical halves") {
  ParameterStore store;
  Philox rng(3);
  auto layer = GruLayer::create(store, "gru", 3, 4, true, rng);
  // Share parameters between directions so both see the same function.
  for (std::size_t g = 0; g < 3; ++g) {
    store[layer.gates[1][g].weight] = store[layer.gates[0][g].weight];
    store[layer.gates[1][g].bias] = store[layer.gates[0][g].bias];
  }
  Philox data(4);
  const Vec out = run_gru(random_seq(1, 3, data), layer, store);
  for (std::size_t j = 0; j < 4; ++j) CHECK(out[j] == out[4 + j]);
}

TEST_CASE("gru matches the naive reference on n=3, h=2") {
  ParameterStore store;
  Philox rng(5);
  auto layer = GruLayer::create(store, "gru", 4, 2, true, rng);
  randomize(store, rng);
  const Seq xs = random_seq(3, 4, rng);
  CHECK(max_abs_diff(run_gru(xs, layer, store), ref_gru(xs, layer, store)) <= 1e-12);
}

TEST_CASE("gru unidirectional mode emits hidden-size output") {
  ParameterStore store;
  Philox rng(6);
  auto layer = GruLayer::create(store, "gru", 3, 6, false, rng);
  const Seq xs = random_seq(4, 3, rng);
  const Vec out = run_gru(xs, layer, store);
  CHECK(out.size() == 6);
  CHECK(max_abs_diff(out, ref_gru(xs, layer, store)) <= 1e-12);
}

TEST_CASE("gru rejects an empty sequence") {
  ParameterStore store;
  Philox rng(7);
  auto layer = GruLayer::create(store, "gru", 3, 2, true, rng);
  Tape tape;
  auto bound = store.bind(tape, false);
  std::vector<Var> none;
  CHECK_THROWS_AS(gru_forward(none, layer, bound), ValidationError);
}

TEST_CASE("reversing the sequence swaps gru halves when directions share weights") {
  ParameterStore store;
  Philox rng(8);
  auto layer = GruLayer::create(store, "gru", 3, 3, true, rng);
  randomize(store, rng);
  for (std::size_t g = 0; g < 3; ++g) {
    store[layer.gates[1][g].weight] = store[layer.gates[0][g].weight];
    store[layer.gates[1][g].bias] = store[layer.gates[0][g].bias];
  }
  Philox data(9);
  const Seq xs = random_seq(6, 3, data);
  const Seq rev(xs.rbegin(), xs.rend());
  const Vec a = run_gru(xs, layer, store);
  const Vec b = run_gru(rev, layer, store);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(a[j] == b[3 + j]);
    CHECK(a[3 + j] == b[j]);
  }
}

TEST_CASE("bilstm with zero weights encodes to zero") {
  ParameterStore store;
  Philox rng(10);
  auto stack = BiLstmStack::create(store, "lstm", 3, 2, 2, rng);
  for (auto& e : store.entries()) e.value.fill(0.0);
  const Vec out = run_lstm(random_seq(4, 3, rng), stack, store);
  CHECK(out == Vec(4, 0.0));
}

TEST_CASE("bilstm with T=1 pools to the single step's states") {
  ParameterStore store;
  Philox rng(11);
  auto stack = BiLstmStack::create(store, "lstm", 3, 2, 2, rng);
  randomize(store, rng);
  const Seq xs = random_seq(1, 3, rng);
  Tape tape(false);
  auto bound = store.bind(tape, false);
  auto inputs = as_vars(tape, xs);
  const auto states = bilstm_states(inputs, stack, bound);
  REQUIRE(states.size() == 1);
  const Tensor single = states[0].value();
  CHECK(bilstm_encode(inputs, stack, bound).value() == single);
}

TEST_CASE("bilstm matches the naive reference on T=4, f=3, h=2, L=2") {
  ParameterStore store;
  Philox rng(12);
  auto stack = BiLstmStack::create(store, "lstm", 3, 2, 2, rng);
  randomize(store, rng);
  const Seq xs = random_seq(4, 3, rng);
  CHECK(max_abs_diff(run_lstm(xs, stack, store), ref_bilstm(xs, stack, store)) <= 1e-12);
}

TEST_CASE("bilstm layer shapes and forget bias") {
  ParameterStore store;
  Philox rng(13);
  auto stack = BiLstmStack::create(store, "lstm", 5, 3, 2, rng);
  CHECK(store[stack.layers[0][0][0].weight].shape() == Shape{3, 8});
  CHECK(store[stack.layers[1][1][2].weight].shape() == Shape{3, 9});
  CHECK(store[stack.layers[1][0][1].bias] == Tensor({3}, 1.0));
  Tape tape;
  auto bound = store.bind(tape, false);
  std::vector<Var> none;
  CHECK_THROWS_AS(bilstm_encode(none, stack, bound), ValidationError);
}

TEST_CASE("layer gradients pass the finite-difference check") {
  Philox rng(14);
  ParameterStore store;
  auto gru = GruLayer::create(store, "gru", 3, 2, true, rng);
  auto lstm = BiLstmStack::create(store, "lstm", 2, 2, 2, rng);
  auto proj = LinearLayer::create(store, "proj", 3, 2, rng);
  randomize(store, rng);
  std::vector<Tensor> inputs;
  for (const auto& e : store.entries()) inputs.push_back(e.value);
  for (int i = 0; i < 3; ++i) inputs.push_back(random_tensor({2, 3}, rng));
  const std::size_t np = store.size();
  auto loss = [&](Tape&, const std::vector<Var>& x) {
    std::span<const Var> bound(x.data(), np);
    std::vector<Var> seq{x[np], x[np + 1], x[np + 2]};
    auto news = gru_forward(seq, gru, bound);
    std::vector<Var> steps;
    for (const Var& s : seq) steps.push_back(relu(proj(bound, s)));
    auto price = bilstm_encode(steps, lstm, bound);
    auto both = concat_cols({news, price});
    return sum(both * both);
  };
  CHECK(grad_check(loss, inputs).max_rel_error < 1e-6);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves params and counts the step") {
    std::vector<Tensor> p{Tensor::vector({1.0, -2.0})};
    std::vector<Tensor> g{Tensor::vector({0.0, 0.0})};
    AdamState state;
    adam_step(std::span<Tensor>(p), g, state);
    CHECK(p[0] == Tensor::vector({1.0, -2.0}));
    CHECK(state.step == 1);
  }
  SUBCASE("unit gradient moves by the learning rate on step one") {
    std::vector<Tensor> p{Tensor::scalar(0.0)};
    std::vector<Tensor> g{Tensor::scalar(1.0)};
    AdamState state;
    adam_step(std::span<Tensor>(p), g, state);
    CHECK(p[0].item() == doctest::Approx(-0.01).epsilon(1e-6));
  }
  SUBCASE("minimizes (x-3)^2") {
    std::vector<Tensor> p{Tensor::scalar(0.0)};
    AdamState state;
    state.learning_rate = 0.08;
    double last = 9.0;
    for (int i = 0; i < 50; ++i) {
      const double x = p[0].item();
      std::vector<Tensor> g{Tensor::scalar(2.0 * (x - 3.0))};
      adam_step(std::span<Tensor>(p), g, state);
      const double loss = (p[0].item() - 3.0) * (p[0].item() - 3.0);
      CHECK(loss <= last);
      last = loss;
    }
    CHECK(std::abs(p[0].item() - 3.0) < 0.5);
  }
  SUBCASE("shape mismatch") {
    std::vector<Tensor> p{Tensor::vector({1.0, 2.0})};
    std::vector<Tensor> g{Tensor::vector({1.0})};
    AdamState state;
    CHECK_THROWS_AS(adam_step(std::span<Tensor>(p), g, state), DimensionError);
  }
}
