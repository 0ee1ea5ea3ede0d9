#pragma once

// Dense rank-2 tensors with recorded-operation reverse-mode differentiation.
//
// A Tensor is a shared handle: copies refer to the same storage and graph
// node, as with most array frameworks. Every primitive below records its
// inputs and a reverse rule when gradients are enabled and any input
// requires a gradient; `backward()` on a 1x1 result walks the recorded graph
// in reverse topological order. Leaf gradients accumulate across calls until
// `zero_grad()`.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logiformer {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  std::string str() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }
  bool operator==(const Shape&) const = default;
};

/// Shape mismatch; the message names the operation and operand shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on first use
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return inputs.empty(); }
  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// True unless a NoGradGuard is active on this thread.
bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Node = detail::Node<T>;

  Tensor();
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}); }
  static Tensor full(std::size_t rows, std::size_t cols, T v) { return Tensor(Shape{rows, cols}, v); }
  static Tensor scalar(T v) { return Tensor(Shape{1, 1}, v); }
  static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows);

  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  /// Direct write access, intended for leaves (initialization, optimizers,
  /// finite differences). Writing into an interior node does not update
  /// anything downstream.
  std::span<T> mutable_values() { return node_->value; }
  T operator()(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  /// Empty span when no gradient has been accumulated.
  std::span<const T> grad() const;
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  /// Reverse pass from this 1x1 tensor. Throws std::logic_error otherwise.
  void backward() const;

  /// Same values, no graph history.
  Tensor detach() const;
  const char* op_name() const { return node_->op; }
  const std::shared_ptr<Node>& node() const { return node_; }
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---------------------------------------------------------------------------
// Primitives. Shapes are (rows x cols); "rows" variants act on each row.

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T value);
/// a (n x c) + row (1 x c), row broadcast down.
template <typename T> Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row);
/// a (n x c) scaled per row by col (n x 1).
template <typename T> Tensor<T> mul_col(const Tensor<T>& a, const Tensor<T>& col);
template <typename T> Tensor<T> concat_cols(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> concat_rows(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end);
/// Column-wise mean over rows, (n x c) -> (1 x c).
template <typename T> Tensor<T> mean_rows(const Tensor<T>& a);
/// Sum of all entries, -> (1 x 1).
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& a);
template <typename T> Tensor<T> log_softmax_rows(const Tensor<T>& a);
/// Per-row normalization to zero mean, unit variance; eps inside the sqrt.
template <typename T> Tensor<T> layer_norm_rows(const Tensor<T>& a, T eps);
/// Normalization followed by the per-column affine gamma (1 x c), beta (1 x c).
template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
/// tanh approximation.
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
/// Rows of `table` selected by `ids`, (ids.size() x table.cols()).
template <typename T> Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids);

/// Elementwise op with caller-supplied value and derivative. Used to build
/// one-off nonlinearities in tests.
template <typename T>
Tensor<T> map_elementwise(const Tensor<T>& a, std::function<T(T)> f, std::function<T(T)> df,
                          const char* name = "map");

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a) { return scale(a, T(-1)); }

}  // namespace logiformer
