// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: random tensors and a central-difference gradient check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "iknet/rng.hpp"
#include "iknet/tensor.hpp"

namespace iknet::testing {

inline Tensor random_tensor(Shape shape, Philox& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Relative error with a floor on the denominator, so entries whose true
// gradient is ~0 are compared absolutely at the floor's scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares tape gradients of `loss(leaves)` for every entry of `inputs`
/// against central differences with step `eps`.
inline GradCheckResult grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& loss,
                                  std::vector<Tensor> inputs, double eps = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    tape.backward(loss(tape, leaves));
    for (const auto& v : leaves) analytic.push_back(v.grad());
  }
  auto evaluate = [&](const std::vector<Tensor>& values) {
    Tape tape(false);
    std::vector<Var> leaves;
    for (const auto& t : values) leaves.push_back(tape.leaf(t));
    return loss(tape, leaves).value().item();
  };
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + eps;
      const double up = evaluate(inputs);
      inputs[k][i] = saved - eps;
      const double down = evaluate(inputs);
      inputs[k][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[k][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace iknet::testing
