// SPDX-License-Identifier: Apache-2.0
//
// Deliberately naive gate-by-gate scalar GRU / Bi-LSTM used as an oracle for
// the tape-based layers. Shares nothing with src/ beyond reading parameter
// tensors out of the store.
#pragma once

#include <cmath>
#include <vector>

#include "iknet/nn.hpp"

namespace iknet::testing {

using Vec = std::vector<double>;
using Seq = std::vector<Vec>;

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out_j = b_j + sum_k W[j][k] * in_k, with in = [x; h]
inline double gate_pre(const Tensor& w, const Tensor& b, const Vec& x, const Vec& h, std::size_t j) {
  const std::size_t cols = w.cols();
  double s = b[j];
  for (std::size_t k = 0; k < x.size(); ++k) s += w[j * cols + k] * x[k];
  for (std::size_t k = 0; k < h.size(); ++k) s += w[j * cols + x.size() + k] * h[k];
  return s;
}

inline Vec ref_gru_direction(const Seq& xs, const GruLayer& layer, const ParameterStore& store, std::size_t dir) {
  const std::size_t hs = layer.hidden;
  const auto& g = layer.gates[dir];
  Vec h(hs, 0.0);
  const std::size_t n = xs.size();
  for (std::size_t s = 0; s < n; ++s) {
    const Vec& x = xs[dir == 0 ? s : n - 1 - s];
    Vec z(hs), r(hs), rh(hs), cand(hs), next(hs);
    for (std::size_t j = 0; j < hs; ++j) z[j] = ref_sigmoid(gate_pre(store[g[0].weight], store[g[0].bias], x, h, j));
    for (std::size_t j = 0; j < hs; ++j) r[j] = ref_sigmoid(gate_pre(store[g[1].weight], store[g[1].bias], x, h, j));
    for (std::size_t j = 0; j < hs; ++j) rh[j] = r[j] * h[j];
    for (std::size_t j = 0; j < hs; ++j) cand[j] = std::tanh(gate_pre(store[g[2].weight], store[g[2].bias], x, rh, j));
    for (std::size_t j = 0; j < hs; ++j) next[j] = (1.0 - z[j]) * cand[j] + z[j] * h[j];
    h = next;
  }
  return h;
}

inline Vec ref_gru(const Seq& xs, const GruLayer& layer, const ParameterStore& store) {
  Vec out;
  for (std::size_t d = 0; d < layer.gates.size(); ++d) {
    const Vec h = ref_gru_direction(xs, layer, store, d);
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

inline Seq ref_lstm_direction(const Seq& xs, const std::array<GateParams, 4>& g, const ParameterStore& store,
                              std::size_t hs, bool reverse) {
  const std::size_t T = xs.size();
  Vec h(hs, 0.0), c(hs, 0.0);
  Seq outs(T);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    Vec next_h(hs), next_c(hs);
    for (std::size_t j = 0; j < hs; ++j) {
      const double i = ref_sigmoid(gate_pre(store[g[0].weight], store[g[0].bias], xs[t], h, j));
      const double f = ref_sigmoid(gate_pre(store[g[1].weight], store[g[1].bias], xs[t], h, j));
      const double gg = std::tanh(gate_pre(store[g[2].weight], store[g[2].bias], xs[t], h, j));
      const double o = ref_sigmoid(gate_pre(store[g[3].weight], store[g[3].bias], xs[t], h, j));
      next_c[j] = f * c[j] + i * gg;
      next_h[j] = o * std::tanh(next_c[j]);
    }
    h = next_h;
    c = next_c;
    outs[t] = h;
  }
  return outs;
}

inline Vec ref_bilstm(const Seq& xs, const BiLstmStack& stack, const ParameterStore& store) {
  Seq in = xs;
  for (const auto& layer : stack.layers) {
    const Seq fwd = ref_lstm_direction(in, layer[0], store, stack.hidden, false);
    const Seq bwd = ref_lstm_direction(in, layer[1], store, stack.hidden, true);
    Seq next(in.size());
    for (std::size_t t = 0; t < in.size(); ++t) {
      next[t] = fwd[t];
      next[t].insert(next[t].end(), bwd[t].begin(), bwd[t].end());
    }
    in = next;
  }
  Vec pooled(2 * stack.hidden, 0.0);
  for (const Vec& v : in) {
    for (std::size_t j = 0; j < v.size(); ++j) pooled[j] += v[j];
  }
  for (double& v : pooled) v /= static_cast<double>(in.size());
  return pooled;
}

}  // namespace iknet::testing
