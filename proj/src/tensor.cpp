// SPDX-License-Identifier: Apache-2.0
#include "iknet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iknet/error.hpp"
#include "iknet/rng.hpp"

namespace iknet {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat as_matrix(const Tensor& t) {
  return ConstMapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

MapMat as_matrix(Tensor& t) {
  return MapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

Tape& tape_of(Var v) {
  if (v.tape == nullptr) throw Error("Var is not attached to a tape");
  return *v.tape;
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " cannot hold " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() == 1) return 1;
  throw DimensionError("rows() on tensor of shape " + shape_string(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  throw DimensionError("cols() on tensor of shape " + shape_string(shape_));
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

// ---- Var / Tape -----------------------------------------------------------

const Tensor& Var::value() const { return tape_of(*this).value(id); }
const Tensor& Var::grad() const { return tape_of(*this).grad(id); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad && record_, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& p : parents) {
      if (p.tape != this) throw Error("operands belong to different tapes");
      needs = needs || nodes_[p.id].requires_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), Tensor{}, needs, needs ? std::move(backward) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::accumulate(Var parent) {
  Node& node = nodes_[parent.id];
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& node = nodes_[id];
  if (node.grad.empty()) {
    zero_scratch_ = Tensor(node.value.shape(), 0.0);
    return zero_scratch_;
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got " + shape_string(nodes_[loss.id].value.shape()));
  }
  if (swept_) throw Error("backward: gradients already computed; call reset_gradients() first");
  swept_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  accumulate(loss).fill(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.backward && !node.grad.empty()) node.backward(*this, node.grad);
  }
}

void Tape::reset_gradients() {
  for (auto& node : nodes_) node.grad = Tensor{};
  swept_ = false;
}

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul", av);
  require_rank2("matmul", bv);
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  return tape_of(a).push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a.id)) as_matrix(t.accumulate(a)).noalias() += as_matrix(g) * as_matrix(t.value(b.id)).transpose();
    if (t.requires_grad(b.id)) as_matrix(t.accumulate(b)).noalias() += as_matrix(t.value(a.id)).transpose() * as_matrix(g);
  });
}

Var linear(Var x, Var weight, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_rank2("linear", xv);
  require_rank2("linear", wv);
  if (xv.cols() != wv.cols() || bv.size() != wv.rows()) {
    throw DimensionError("linear: input " + shape_string(xv.shape()) + ", weight " + shape_string(wv.shape()) +
                         ", bias " + shape_string(bv.shape()));
  }
  Tensor out({xv.rows(), wv.rows()});
  auto o = as_matrix(out);
  o.noalias() = as_matrix(xv) * as_matrix(wv).transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(bv.data().data(), static_cast<Eigen::Index>(bv.size()));
  o.rowwise() += b;
  return tape_of(x).push(std::move(out), {x, weight, bias}, [x, weight, bias](Tape& t, const Tensor& g) {
    auto gm = as_matrix(g);
    if (t.requires_grad(x.id)) as_matrix(t.accumulate(x)).noalias() += gm * as_matrix(t.value(weight.id));
    if (t.requires_grad(weight.id)) as_matrix(t.accumulate(weight)).noalias() += gm.transpose() * as_matrix(t.value(x.id));
    if (t.requires_grad(bias.id)) {
      Tensor& gb = t.accumulate(bias);
      Eigen::Map<Eigen::RowVectorXd>(gb.data().data(), static_cast<Eigen::Index>(gb.size())) += gm.colwise().sum();
    }
  });
}

Var elementwise(BinaryOp op, Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(op == BinaryOp::add ? "add" : "mul", av, bv);
  Tensor out(av.shape());
  const std::size_t n = av.size();
  if (op == BinaryOp::add) {
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
    return tape_of(a).push(std::move(out), {a, b}, [a, b, n](Tape& t, const Tensor& g) {
      if (t.requires_grad(a.id)) {
        Tensor& ga = t.accumulate(a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (t.requires_grad(b.id)) {
        Tensor& gb = t.accumulate(b);
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
  return tape_of(a).push(std::move(out), {a, b}, [a, b, n](Tape& t, const Tensor& g) {
    if (t.requires_grad(a.id)) {
      const Tensor& bv = t.value(b.id);
      Tensor& ga = t.accumulate(a);
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id)) {
      const Tensor& av = t.value(a.id);
      Tensor& gb = t.accumulate(b);
      for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var elementwise(UnaryOp op, Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  const std::size_t n = av.size();
  switch (op) {
    case UnaryOp::relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
      break;
    case UnaryOp::sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(av[i]);
      break;
    case UnaryOp::tanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(av[i]);
      break;
  }
  Tape& tape = tape_of(a);
  Var self{&tape, tape.size()};
  return tape.push(std::move(out), {a}, [a, self, op, n](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self.id);
    Tensor& ga = t.accumulate(a);
    switch (op) {
      case UnaryOp::relu:  // relu'(0) = 0
        for (std::size_t i = 0; i < n; ++i) ga[i] += y[i] > 0.0 ? g[i] : 0.0;
        break;
      case UnaryOp::sigmoid:
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case UnaryOp::tanh:
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
    }
  });
}

Var add(Var a, Var b) { return elementwise(BinaryOp::add, a, b); }
Var mul(Var a, Var b) { return elementwise(BinaryOp::mul, a, b); }
Var relu(Var a) { return elementwise(UnaryOp::relu, a); }
Var sigmoid(Var a) { return elementwise(UnaryOp::sigmoid, a); }
Var tanh(Var a) { return elementwise(UnaryOp::tanh, a); }

Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape("sub", av, bv);
  Tensor out(av.shape());
  const std::size_t n = av.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
  return tape_of(a).push(std::move(out), {a, b}, [a, b, n](Tape& t, const Tensor& g) {
    if (t.requires_grad(a.id)) {
      Tensor& ga = t.accumulate(a);
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor& gb = t.accumulate(b);
      for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
    }
  });
}

Var one_minus(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  const std::size_t n = av.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 - av[i];
  return tape_of(a).push(std::move(out), {a}, [a, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.accumulate(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] -= g[i];
  });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  const std::size_t n = av.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * factor;
  return tape_of(a).push(std::move(out), {a}, [a, n, factor](Tape& t, const Tensor& g) {
    Tensor& ga = t.accumulate(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * factor;
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t rows = parts[0].value().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() > 2) require_rank2("concat_cols", v);
    if (v.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts[0].shape()) + " vs " +
                           shape_string(v.shape()));
    }
    offsets.push_back(total);
    total += v.cols();
  }
  Tensor out({rows, total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    const std::size_t c = v.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data().data() + r * c, c, out.data().data() + r * total + offsets[k]);
    }
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return tape_of(parts[0]).push(std::move(out), parts, [keep, offsets, rows, total](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      if (!t.requires_grad(keep[k].id)) continue;
      Tensor& gp = t.accumulate(keep[k]);
      const std::size_t c = gp.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = g.data().data() + r * total + offsets[k];
        double* dst = gp.data().data() + r * c;
        for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
      }
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_rank2("slice_cols", av);
  if (begin > end || end > av.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
                         shape_string(av.shape()));
  }
  const std::size_t rows = av.rows();
  const std::size_t cols = av.cols();
  const std::size_t width = end - begin;
  Tensor out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data().data() + r * cols + begin, width, out.data().data() + r * width);
  }
  return tape_of(a).push(std::move(out), {a}, [a, rows, cols, begin, width](Tape& t, const Tensor& g) {
    Tensor& ga = t.accumulate(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < width; ++j) ga[r * cols + begin + j] += g[r * width + j];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require_rank2("concat_rows", p.value());
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    }
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Var& p : parts) {
    auto v = p.value().data();
    data.insert(data.end(), v.begin(), v.end());
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return tape_of(parts[0]).push(Tensor({rows, cols}, std::move(data)), parts, [keep](Tape& t, const Tensor& g) {
    std::size_t offset = 0;
    for (const Var& p : keep) {
      const std::size_t n = t.value(p.id).size();
      if (t.requires_grad(p.id)) {
        Tensor& gp = t.accumulate(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var mean_of(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("mean_of: no operands");
  const Tensor& first = parts[0].value();
  Tensor out(first.shape(), 0.0);
  const std::size_t n = first.size();
  for (const Var& p : parts) {
    require_same_shape("mean_of", first, p.value());
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < n; ++i) out[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
  std::vector<Var> keep(parts.begin(), parts.end());
  return tape_of(parts[0]).push(std::move(out), parts, [keep, inv, n](Tape& t, const Tensor& g) {
    for (const Var& p : keep) {
      if (!t.requires_grad(p.id)) continue;
      Tensor& gp = t.accumulate(p);
      for (std::size_t i = 0; i < n; ++i) gp[i] += g[i] * inv;
    }
  });
}

Var mean_rows(Var a) {
  const Tensor& av = a.value();
  require_rank2("mean_rows", av);
  const std::size_t rows = av.rows();
  const std::size_t cols = av.cols();
  if (rows == 0) throw DimensionError("mean_rows: no rows");
  Tensor out({1, cols}, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += av[r * cols + c];
  }
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t c = 0; c < cols; ++c) out[c] *= inv;
  return tape_of(a).push(std::move(out), {a}, [a, rows, cols, inv](Tape& t, const Tensor& g) {
    Tensor& ga = t.accumulate(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c] * inv;
    }
  });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double v : av.data()) s += v;
  const std::size_t n = av.size();
  return tape_of(a).push(Tensor::scalar(s), {a}, [a, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.accumulate(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[0];
  });
}

Var pick(Var a, std::size_t row, std::size_t col) {
  const Tensor& av = a.value();
  require_rank2("pick", av);
  if (row >= av.rows() || col >= av.cols()) {
    throw DimensionError("pick: (" + std::to_string(row) + ", " + std::to_string(col) + ") outside " +
                         shape_string(av.shape()));
  }
  const std::size_t index = row * av.cols() + col;
  return tape_of(a).push(Tensor::scalar(av[index]), {a},
                         [a, index](Tape& t, const Tensor& g) { t.accumulate(a)[index] += g[0]; });
}

Var mse(Var prediction, const Tensor& target) {
  const Tensor& pv = prediction.value();
  if (pv.size() != target.size() || pv.empty()) {
    throw DimensionError("mse: prediction " + shape_string(pv.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const std::size_t n = pv.size();
  std::vector<double> diff(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = pv[i] - target[i];
    s += diff[i] * diff[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  return tape_of(prediction).push(Tensor::scalar(s * inv), {prediction},
                                  [prediction, diff = std::move(diff), inv](Tape& t, const Tensor& g) {
                                    Tensor& gp = t.accumulate(prediction);
                                    for (std::size_t i = 0; i < diff.size(); ++i) gp[i] += 2.0 * inv * diff[i] * g[0];
                                  });
}

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Tensor& lv = logits.value();
  require_rank2("softmax_cross_entropy", lv);
  const std::size_t m = lv.rows();
  const std::size_t k = lv.cols();
  if (labels.size() != m) throw DimensionError("softmax_cross_entropy: label count differs from rows");
  Tensor probs({m, k});
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (labels[r] >= k) throw DimensionError("softmax_cross_entropy: label out of range");
    const double* row = lv.data().data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(row[c] - mx);
    for (std::size_t c = 0; c < k; ++c) probs[r * k + c] = std::exp(row[c] - mx) / z;
    loss -= row[labels[r]] - mx - std::log(z);
  }
  const double inv = 1.0 / static_cast<double>(m);
  std::vector<std::size_t> keep(labels.begin(), labels.end());
  return tape_of(logits).push(Tensor::scalar(loss * inv), {logits},
                              [logits, probs = std::move(probs), keep = std::move(keep), inv, k](Tape& t, const Tensor& g) {
                                Tensor& gl = t.accumulate(logits);
                                for (std::size_t r = 0; r < keep.size(); ++r) {
                                  for (std::size_t c = 0; c < k; ++c) {
                                    const double target = c == keep[r] ? 1.0 : 0.0;
                                    gl[r * k + c] += g[0] * inv * (probs[r * k + c] - target);
                                  }
                                }
                              });
}

Var dropout(Var x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0) || rate >= 1.0) throw ValidationError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const Tensor& xv = x.value();
  const std::size_t n = xv.size();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(n);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = philox_uniform(seed, i) < rate ? 0.0 : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  return tape_of(x).push(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor& gx = t.accumulate(x);
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

}  // namespace iknet
