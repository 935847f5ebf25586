// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major f64 tensors and a reverse-mode autodiff tape.
//
// A Tape owns every value produced during one forward pass. Vars are cheap
// handles (tape pointer + node index); nodes are appended in evaluation
// order, so the tape is topologically sorted by construction and backward()
// is a single reverse sweep.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace iknet {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned storage. Eigen's vectorized kernels peel differently
/// depending on the start address, so a fixed alignment keeps results
/// bit-identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  /// Rows of a rank-2 tensor; 1 for rank-1.
  std::size_t rows() const;
  /// Columns of a rank-2 tensor; length for rank-1.
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  /// Value of a single-element tensor.
  double item() const;

  void fill(double value);
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  Storage data_;
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  /// With record=false, ops compute values only (inference / SHAP fan-out).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Reverse sweep from a single-element loss. Call reset_gradients() before
  /// sweeping the same tape again.
  void backward(Var loss);
  void reset_gradients();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient buffer; an all-zero tensor of the value's shape if nothing flowed.
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  using Backward = std::function<void(Tape&, const Tensor& upstream)>;

  /// Appends a derived node. `backward` receives the node's gradient and
  /// must accumulate into its parents via accumulate().
  Var push(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var push(Tensor value, std::span<const Var> parents, Backward backward);

  /// Gradient accumulator for a parent; allocated on first use.
  Tensor& accumulate(Var parent);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  bool record_;
  bool swept_ = false;
  std::vector<Node> nodes_;
  mutable Tensor zero_scratch_;
};

enum class UnaryOp { relu, sigmoid, tanh };
enum class BinaryOp { add, mul };

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
Var elementwise(BinaryOp op, Var a, Var b);
Var elementwise(UnaryOp op, Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
/// 1 - a
Var one_minus(Var a);
Var scale(Var a, double factor);
/// x[m x in] * W[out x in]^T + b[out]
Var linear(Var x, Var weight, Var bias);
/// Column-wise concatenation of tensors with equal row counts (rank-1 counts as one row).
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
/// Columns [begin, end) of a rank-2 tensor.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Row-wise stacking of rank-2 tensors with equal column counts.
Var concat_rows(std::span<const Var> parts);
/// Elementwise mean of equally shaped tensors.
Var mean_of(std::span<const Var> parts);
/// Mean over rows: [m x n] -> [1 x n].
Var mean_rows(Var a);
/// Sum of all elements -> shape {1}.
Var sum(Var a);
/// Element (r, c) of a rank-2 tensor -> shape {1}.
Var pick(Var a, std::size_t row, std::size_t col);
/// Mean squared error against a constant target of the same element count.
Var mse(Var prediction, const Tensor& target);
/// Mean softmax cross-entropy of logits[m x C] against class labels.
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);
/// Inverted dropout; the mask is a pure function of `seed` and element index.
Var dropout(Var x, double rate, bool training, std::uint64_t seed);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace iknet
