#pragma once

// Dense double-precision tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations on tensors that
// require gradients record a backward closure on the result; backward() on a
// scalar replays those closures in reverse topological order and then frees
// the recorded graph, so training loops re-record every step.
//
// Tensors are rank 1 ({n}) or rank 2 ({rows, cols}); scalars are {1}.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cogat {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-1 tensors are viewed as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates a zero buffer on first use
  void zero_grad();

  // Value copy detached from any recorded graph.
  Tensor detach() const;

  // Reverse sweep from this scalar. Gradients accumulate into every reachable
  // tensor that requires grad; the recorded graph is released afterwards.
  void backward() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct detail::Node;
  friend class OpBuilder;
};

// Sparse count vector over a hashed vocabulary: (index, count) pairs sorted by index.
using SparseCounts = std::vector<std::pair<std::uint32_t, double>>;

// ---------------------------------------------------------------------------
// Operations. Every op validates shapes and throws ShapeError naming both
// operand shapes on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a * s for a one-element tensor s.
Tensor scale_by(const Tensor& a, const Tensor& s);
// Adds a length-n bias to every row of an m×n (or length-n) tensor.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// x · weightᵀ + bias, weight is out×in, bias has length out.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor tanh(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Stable softmax along `axis` (0 or 1 for rank 2, 0 for rank 1).
Tensor softmax(const Tensor& x, std::size_t axis);
// -log(probs[target]) with probs[target] floored at kLogFloor.
Tensor cross_entropy(const Tensor& probs, std::size_t target);
// w·a + (1-w)·b with w a one-element tensor; result clamped to [min(a,b), max(a,b)].
Tensor blend(const Tensor& a, const Tensor& b, const Tensor& w);
Tensor concat_cols(std::span<const Tensor> parts);
// Stacks rank-1 vectors of equal length into a rows×n matrix.
Tensor stack_rows(std::span<const Tensor> rows);
Tensor row(const Tensor& x, std::size_t r);
Tensor element(const Tensor& x, std::size_t i);
// Σ count · table[index] over the sparse entries; the zero vector when empty.
Tensor embedding_bag(const Tensor& table, const SparseCounts& counts);

inline constexpr double kLogFloor = 1e-12;

// Number of times cross_entropy hit the log floor since process start (or last reset).
std::uint64_t log_floor_events();
void reset_log_floor_events();

}  // namespace cogat
