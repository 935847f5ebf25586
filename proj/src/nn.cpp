// SPDX-License-Identifier: Apache-2.0
#include "iknet/nn.hpp"

#include <algorithm>
#include <cmath>

#include "iknet/error.hpp"

namespace iknet {

std::size_t ParameterStore::add(std::string name, Tensor value) {
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.size() - 1;
}

std::size_t ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw ValidationError("no parameter named '" + name + "'");
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<Var> ParameterStore::bind(Tape& tape, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(entries_.size());
  for (const auto& e : entries_) vars.push_back(tape.leaf(e.value, requires_grad));
  return vars;
}

std::vector<Tensor> ParameterStore::gradients(std::span<const Var> bound) {
  std::vector<Tensor> grads;
  grads.reserve(bound.size());
  for (const Var& v : bound) grads.push_back(v.grad());
  return grads;
}

Tensor uniform_init(Shape shape, std::size_t fan_in, Philox& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

LinearLayer LinearLayer::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                                Philox& rng) {
  LinearLayer layer;
  layer.in = in;
  layer.out = out;
  layer.weight = store.add(name + ".weight", uniform_init({out, in}, in, rng));
  layer.bias = store.add(name + ".bias", Tensor({out}, 0.0));
  return layer;
}

Var LinearLayer::operator()(std::span<const Var> bound, Var x) const {
  return linear(x, bound[weight], bound[bias]);
}

namespace {

GateParams make_gate(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                     double bias_value, Philox& rng) {
  GateParams g;
  g.weight = store.add(name + ".weight", uniform_init({hidden, input + hidden}, input + hidden, rng));
  g.bias = store.add(name + ".bias", Tensor({hidden}, bias_value));
  return g;
}

Var zeros(Tape& tape, std::size_t rows, std::size_t cols) { return tape.constant(Tensor({rows, cols}, 0.0)); }

// Stacks per-gate weights/biases so one matmul serves all gates of a step.
struct StackedGates {
  Var weight;
  Var bias;
};

template <std::size_t N>
StackedGates stack_gates(const std::array<GateParams, N>& gates, std::span<const Var> bound, std::size_t first,
                         std::size_t count) {
  std::vector<Var> ws;
  std::vector<Var> bs;
  for (std::size_t k = first; k < first + count; ++k) {
    ws.push_back(bound[gates[k].weight]);
    bs.push_back(bound[gates[k].bias]);
  }
  if (count == 1) return {ws[0], bs[0]};
  return {concat_rows(ws), concat_cols(bs)};
}

}  // namespace

GruLayer GruLayer::create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                          bool bidirectional, Philox& rng) {
  GruLayer layer;
  layer.input = input;
  layer.hidden = hidden;
  layer.bidirectional = bidirectional;
  const std::size_t dirs = bidirectional ? 2 : 1;
  static constexpr const char* kDir[] = {"fwd", "bwd"};
  static constexpr const char* kGate[] = {"update", "reset", "candidate"};
  for (std::size_t d = 0; d < dirs; ++d) {
    std::array<GateParams, 3> gates;
    for (std::size_t g = 0; g < 3; ++g) {
      gates[g] = make_gate(store, name + "." + kDir[d] + "." + kGate[g], input, hidden, 0.0, rng);
    }
    layer.gates.push_back(gates);
  }
  return layer;
}

Var gru_forward(std::span<const Var> inputs, const GruLayer& layer, std::span<const Var> bound) {
  if (inputs.empty()) throw ValidationError("gru_forward: empty input sequence");
  Tape& tape = *inputs[0].tape;
  const std::size_t batch = inputs[0].value().rows();
  const std::size_t h = layer.hidden;
  for (const Var& x : inputs) {
    if (x.value().rank() != 2 || x.value().cols() != layer.input || x.value().rows() != batch) {
      throw DimensionError("gru_forward: input " + shape_string(x.shape()) + " does not match layer input " +
                           std::to_string(layer.input));
    }
  }
  std::vector<Var> finals;
  for (std::size_t d = 0; d < layer.gates.size(); ++d) {
    const auto zr = stack_gates(layer.gates[d], bound, 0, 2);
    const Var wn = bound[layer.gates[d][2].weight];
    const Var bn = bound[layer.gates[d][2].bias];
    Var state = zeros(tape, batch, h);
    const std::size_t n = inputs.size();
    for (std::size_t step = 0; step < n; ++step) {
      const Var x = inputs[d == 0 ? step : n - 1 - step];
      const Var gates = sigmoid(linear(concat_cols({x, state}), zr.weight, zr.bias));
      const Var update = slice_cols(gates, 0, h);
      const Var reset = slice_cols(gates, h, 2 * h);
      const Var candidate = tanh(linear(concat_cols({x, reset * state}), wn, bn));
      state = one_minus(update) * candidate + update * state;
    }
    finals.push_back(state);
  }
  return finals.size() == 1 ? finals[0] : concat_cols(finals);
}

BiLstmStack BiLstmStack::create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                                std::size_t layer_count, Philox& rng) {
  if (layer_count == 0) throw ValidationError("BiLstmStack: need at least one layer");
  BiLstmStack stack;
  stack.input = input;
  stack.hidden = hidden;
  static constexpr const char* kDir[] = {"fwd", "bwd"};
  static constexpr const char* kGate[] = {"input", "forget", "cell", "output"};
  for (std::size_t l = 0; l < layer_count; ++l) {
    const std::size_t in = l == 0 ? input : 2 * hidden;
    std::array<std::array<GateParams, 4>, 2> dirs;
    for (std::size_t d = 0; d < 2; ++d) {
      for (std::size_t g = 0; g < 4; ++g) {
        const double bias = g == 1 ? 1.0 : 0.0;  // forget gate starts open
        dirs[d][g] = make_gate(store, name + ".l" + std::to_string(l) + "." + kDir[d] + "." + kGate[g], in, hidden,
                               bias, rng);
      }
    }
    stack.layers.push_back(dirs);
  }
  return stack;
}

std::vector<Var> bilstm_states(std::span<const Var> steps, const BiLstmStack& stack, std::span<const Var> bound) {
  if (steps.empty()) throw ValidationError("bilstm_encode: window length T must be at least 1");
  Tape& tape = *steps[0].tape;
  const std::size_t batch = steps[0].value().rows();
  const std::size_t h = stack.hidden;
  const std::size_t T = steps.size();
  for (const Var& x : steps) {
    if (x.value().rank() != 2 || x.value().cols() != stack.input || x.value().rows() != batch) {
      throw DimensionError("bilstm_encode: step " + shape_string(x.shape()) + " does not match input " +
                           std::to_string(stack.input));
    }
  }
  std::vector<Var> layer_in(steps.begin(), steps.end());
  for (const auto& layer : stack.layers) {
    std::array<std::vector<Var>, 2> outs;
    for (std::size_t d = 0; d < 2; ++d) {
      const auto g = stack_gates(layer[d], bound, 0, 4);
      Var hidden = zeros(tape, batch, h);
      Var cell = zeros(tape, batch, h);
      outs[d].resize(T);
      for (std::size_t s = 0; s < T; ++s) {
        const std::size_t t = d == 0 ? s : T - 1 - s;
        const Var pre = linear(concat_cols({layer_in[t], hidden}), g.weight, g.bias);
        const Var in_gate = sigmoid(slice_cols(pre, 0, h));
        const Var forget = sigmoid(slice_cols(pre, h, 2 * h));
        const Var cand = tanh(slice_cols(pre, 2 * h, 3 * h));
        const Var out_gate = sigmoid(slice_cols(pre, 3 * h, 4 * h));
        cell = forget * cell + in_gate * cand;
        hidden = out_gate * tanh(cell);
        outs[d][t] = hidden;
      }
    }
    std::vector<Var> next(T);
    for (std::size_t t = 0; t < T; ++t) next[t] = concat_cols({outs[0][t], outs[1][t]});
    layer_in = std::move(next);
  }
  return layer_in;
}

Var bilstm_encode(std::span<const Var> steps, const BiLstmStack& stack, std::span<const Var> bound) {
  const auto states = bilstm_states(steps, stack, bound);
  return mean_of(states);
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const Tensor& p : params) {
      state.first_moment.emplace_back(p.shape(), 0.0);
      state.second_moment.emplace_back(p.shape(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam_step: moment buffer count mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v)) {
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(k) + ": " +
                           shape_string(p.shape()) + " vs grad " + shape_string(g.shape()) + " / moments " +
                           shape_string(m.shape()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(ParameterStore& store, std::span<const Tensor> grads, AdamState& state) {
  if (store.size() != grads.size()) throw DimensionError("adam_step: parameter/gradient count mismatch");
  // Operate in place on the store's tensors.
  std::vector<Tensor> params;
  params.reserve(store.size());
  for (auto& e : store.entries()) params.push_back(std::move(e.value));
  try {
    adam_step(std::span<Tensor>(params), grads, state);
  } catch (...) {
    for (std::size_t k = 0; k < params.size(); ++k) store.entries()[k].value = std::move(params[k]);
    throw;
  }
  for (std::size_t k = 0; k < params.size(); ++k) store.entries()[k].value = std::move(params[k]);
}

}  // namespace iknet
