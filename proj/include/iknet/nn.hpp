// SPDX-License-Identifier: Apache-2.0
//
// Layers built on the autodiff tape: linear projection, GRU, stacked
// Bi-LSTM, and the Adam optimizer.
//
// Parameters live in a ParameterStore (ordered, named tensors). Layers hold
// indices into the store; a forward pass binds the whole store onto a tape
// once and layers look their Vars up by index.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iknet/rng.hpp"
#include "iknet/tensor.hpp"

namespace iknet {

struct NamedTensor {
  std::string name;
  Tensor value;
};

class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value);
  std::size_t size() const noexcept { return entries_.size(); }
  Tensor& operator[](std::size_t i) { return entries_[i].value; }
  const Tensor& operator[](std::size_t i) const { return entries_[i].value; }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  std::vector<NamedTensor>& entries() noexcept { return entries_; }
  const std::vector<NamedTensor>& entries() const noexcept { return entries_; }
  /// Index of a named entry; throws if absent.
  std::size_t find(const std::string& name) const;
  std::size_t scalar_count() const;

  /// Puts every parameter on `tape` as a leaf.
  std::vector<Var> bind(Tape& tape, bool requires_grad) const;
  /// Gradients of bound parameters after Tape::backward.
  static std::vector<Tensor> gradients(std::span<const Var> bound);

 private:
  std::vector<NamedTensor> entries_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights from a seeded stream.
Tensor uniform_init(Shape shape, std::size_t fan_in, Philox& rng);

struct LinearLayer {
  std::size_t weight = 0;  // [out x in]
  std::size_t bias = 0;    // [out]
  std::size_t in = 0;
  std::size_t out = 0;

  static LinearLayer create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                            Philox& rng);
  Var operator()(std::span<const Var> bound, Var x) const;
};

struct GateParams {
  std::size_t weight = 0;  // [hidden x (input + hidden)]
  std::size_t bias = 0;    // [hidden]
};

/// Single-layer GRU, one or two directions. Update/reset/candidate gates act on
/// [x_t; h_{t-1}] (candidate on [x_t; r_t * h_{t-1}]); h_t = (1 - z) * n + z * h_{t-1}.
struct GruLayer {
  std::size_t input = 0;
  std::size_t hidden = 0;
  bool bidirectional = true;
  // directions x {update, reset, candidate}
  std::vector<std::array<GateParams, 3>> gates;

  static GruLayer create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                         bool bidirectional, Philox& rng);
  std::size_t output_size() const noexcept { return bidirectional ? 2 * hidden : hidden; }
};

/// Runs the GRU over `inputs` (each [batch x input]) from zero state and
/// returns [final forward state; final backward state].
Var gru_forward(std::span<const Var> inputs, const GruLayer& layer, std::span<const Var> bound);

/// Stack of bidirectional LSTM layers; gates ordered {input, forget, cell, output}.
struct BiLstmStack {
  std::size_t input = 0;
  std::size_t hidden = 0;
  // layers x directions(2) x gates(4)
  std::vector<std::array<std::array<GateParams, 4>, 2>> layers;

  static BiLstmStack create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                            std::size_t layer_count, Philox& rng);
  std::size_t output_size() const noexcept { return 2 * hidden; }
};

/// Per-step [forward; backward] states of the last layer, each [batch x 2h].
std::vector<Var> bilstm_states(std::span<const Var> steps, const BiLstmStack& stack, std::span<const Var> bound);
/// Mean over time of the last layer's concatenated states: [batch x 2h].
Var bilstm_encode(std::span<const Var> steps, const BiLstmStack& stack, std::span<const Var> bound);

struct AdamState {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update. Moment buffers are created on first use.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);
void adam_step(ParameterStore& store, std::span<const Tensor> grads, AdamState& state);

}  // namespace iknet
