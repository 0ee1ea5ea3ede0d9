#include "logiformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace logiformer {

namespace {

thread_local bool g_grad_enabled = true;

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

// C (m x n) += op(A) op(B) with inner dimension k. Loop orders keep the
// innermost access contiguous for each transpose combination.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C (m x n) += A (m x k) B^T, B stored (n x k).
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] += acc;
    }
  }
}

// C (m x n) += A^T B, A stored (k x m), B stored (k x n).
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* ap = a + p * m;
    const T* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T api = ap[i];
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <typename T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> inputs) {
  for (const auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Allocates the output node and, when recording, wires inputs and the
// reverse rule.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values, std::vector<NodePtr<T>> inputs,
                      std::function<void(detail::Node<T>&)> backward) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->value = std::move(values);
  node->op = op;
  bool record = g_grad_enabled;
  if (record) {
    record = false;
    for (const auto& in : inputs) record |= in->requires_grad;
  }
  if (record) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
T gelu_value(T x) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T u = c * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_derivative(T x) {
  const T c = static_cast<T>(0.7978845608028654);
  const T u = c * (x + T(0.044715) * x * x * x);
  const T t = std::tanh(u);
  const T du = c * (T(1) + T(3) * T(0.044715) * x * x);
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
}

template <typename T>
T sigmoid_value(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// Tensor members

template <typename T>
Tensor<T>::Tensor() : Tensor(Shape{0, 0}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<Node>()) {
  node_->shape = shape;
  node_->value.assign(shape.size(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<Node>()) {
  if (values.size() != shape.size())
    throw DimensionError("tensor: " + std::to_string(values.size()) + " values for shape " + shape.str());
  node_->shape = shape;
  node_->value = std::move(values);
}

template <typename T>
Tensor<T> Tensor<T>::from_rows(std::initializer_list<std::initializer_list<T>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<T> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(values));
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw DimensionError("item: tensor has shape " + shape().str());
  return node_->value[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  if (!node_->is_leaf()) throw std::logic_error("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
  return *this;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) return {};
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  if (size() != 1) throw std::logic_error("backward: expected a 1x1 tensor, got " + shape().str());
  if (!node_->requires_grad) throw std::logic_error("backward: tensor does not require a gradient");

  // Iterative DFS post-order gives a topological order with inputs first.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass scratch; leaves accumulate.
  for (Node* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf()) continue;
    for (const auto& in : n->inputs)
      if (in->requires_grad) in->ensure_grad();
    n->backward(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), node_->value);
}

// ---------------------------------------------------------------------------
// Primitives

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> out(m * n, T(0));
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  auto an = a.node(), bn = b.node();
  return make_result<T>("matmul", {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](detail::Node<T>& self) {
    // dA = dC B^T, dB = A^T dC
    if (an->requires_grad) gemm_nt(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
    if (bn->requires_grad) gemm_tn(an->value.data(), self.grad.data(), bn->grad.data(), k, m, n);
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(r * c);
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  auto an = a.node();
  return make_result<T>("transpose", {c, r}, std::move(out), {an}, [an, r, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += self.grad[j * r + i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  auto an = a.node(), bn = b.node();
  return make_result<T>("add", a.shape(), std::move(out), {an, bn}, [an, bn](detail::Node<T>& self) {
    for (auto* in : {an.get(), bn.get()})
      if (in->requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  auto an = a.node(), bn = b.node();
  return make_result<T>("sub", a.shape(), std::move(out), {an, bn}, [an, bn](detail::Node<T>& self) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    if (bn->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  auto an = a.node(), bn = b.node();
  return make_result<T>("mul", a.shape(), std::move(out), {an, bn}, [an, bn](detail::Node<T>& self) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    if (bn->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x *= factor;
  auto an = a.node();
  return make_result<T>("scale", a.shape(), std::move(out), {an}, [an, factor](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x += value;
  auto an = a.node();
  return make_result<T>("add_scalar", a.shape(), std::move(out), {an}, [an](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.shape(), row.shape());
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto rv = row.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += rv[j];
  auto an = a.node(), rn = row.node();
  return make_result<T>("add_row", a.shape(), std::move(out), {an, rn}, [an, rn, r, c](detail::Node<T>& self) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    if (rn->requires_grad)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) rn->grad[j] += self.grad[i * c + j];
  });
}

template <typename T>
Tensor<T> mul_col(const Tensor<T>& a, const Tensor<T>& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) shape_error("mul_col", a.shape(), col.shape());
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto cv = col.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] *= cv[i];
  auto an = a.node(), cn = col.node();
  return make_result<T>("mul_col", a.shape(), std::move(out), {an, cn}, [an, cn, r, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i) {
      T acc = T(0);
      for (std::size_t j = 0; j < c; ++j) {
        const T g = self.grad[i * c + j];
        if (an->requires_grad) an->grad[i * c + j] += g * cn->value[i];
        acc += g * an->value[i * c + j];
      }
      if (cn->requires_grad) cn->grad[i] += acc;
    }
  });
}

template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) shape_error("concat_cols", parts[0].shape(), p.shape());
    c += p.cols();
  }
  std::vector<T> out(r * c);
  std::vector<NodePtr<T>> inputs;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto v = p.values();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.begin() + i * p.cols(), p.cols(), out.begin() + i * c + off);
    inputs.push_back(p.node());
    offsets.push_back(off);
    off += p.cols();
  }
  auto captured = inputs;
  return make_result<T>("concat_cols", {r, c}, std::move(out), std::move(inputs),
                        [captured, offsets, r, c](detail::Node<T>& self) {
                          for (std::size_t k = 0; k < captured.size(); ++k) {
                            auto& in = *captured[k];
                            if (!in.requires_grad) continue;
                            const std::size_t pc = in.shape.cols;
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < pc; ++j) in.grad[i * pc + j] += self.grad[i * c + offsets[k] + j];
                          }
                        });
}

template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) shape_error("concat_rows", parts[0].shape(), p.shape());
    r += p.rows();
  }
  std::vector<T> out;
  out.reserve(r * c);
  std::vector<NodePtr<T>> inputs;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    inputs.push_back(p.node());
  }
  auto captured = inputs;
  return make_result<T>("concat_rows", {r, c}, std::move(out), std::move(inputs),
                        [captured](detail::Node<T>& self) {
                          std::size_t off = 0;
                          for (const auto& in : captured) {
                            const std::size_t n = in->value.size();
                            if (in->requires_grad)
                              for (std::size_t i = 0; i < n; ++i) in->grad[i] += self.grad[off + i];
                            off += n;
                          }
                        });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows())
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of " +
                         a.shape().str());
  const std::size_t c = a.cols();
  std::vector<T> out(a.values().begin() + begin * c, a.values().begin() + end * c);
  auto an = a.node();
  return make_result<T>("slice_rows", {end - begin, c}, std::move(out), {an}, [an, begin, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[begin * c + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols())
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of " +
                         a.shape().str());
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<T> out(r * w);
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i) std::copy_n(v.begin() + i * c + begin, w, out.begin() + i * w);
  auto an = a.node();
  return make_result<T>("slice_cols", {r, w}, std::move(out), {an}, [an, begin, r, c, w](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) an->grad[i * c + begin + j] += self.grad[i * w + j];
  });
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a) {
  const std::size_t r = a.rows(), c = a.cols();
  if (r == 0) throw DimensionError("mean_rows: no rows");
  std::vector<T> out(c, T(0));
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += v[i * c + j];
  const T inv = T(1) / static_cast<T>(r);
  for (auto& x : out) x *= inv;
  auto an = a.node();
  return make_result<T>("mean_rows", {1, c}, std::move(out), {an}, [an, r, c, inv](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += self.grad[j] * inv;
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = T(0);
  for (T x : a.values()) total += x;
  auto an = a.node();
  return make_result<T>("sum", {1, 1}, {total}, {an}, [an](detail::Node<T>& self) {
    for (auto& g : an->grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < r; ++i) {
    T* row = out.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T z = T(0);
    for (std::size_t j = 0; j < c; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) row[j] /= z;
  }
  auto an = a.node();
  return make_result<T>("softmax_rows", a.shape(), std::move(out), {an}, [an, r, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i) {
      const T* y = self.value.data() + i * c;
      const T* g = self.grad.data() + i * c;
      T dot = T(0);
      for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += y[j] * (g[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < r; ++i) {
    T* row = out.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T z = T(0);
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const T lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) row[j] -= lse;
  }
  auto an = a.node();
  return make_result<T>("log_softmax_rows", a.shape(), std::move(out), {an}, [an, r, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i) {
      const T* y = self.value.data() + i * c;
      const T* g = self.grad.data() + i * c;
      T gsum = T(0);
      for (std::size_t j = 0; j < c; ++j) gsum += g[j];
      for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
}

namespace {

// Shared forward for both layer-norm variants. Returns xhat and 1/sigma.
template <typename T>
void normalize_rows(std::span<const T> x, std::size_t r, std::size_t c, T eps, std::vector<T>& xhat,
                    std::vector<T>& inv_sigma) {
  xhat.resize(r * c);
  inv_sigma.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = x.data() + i * c;
    T mean = T(0);
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<T>(c);
    T var = T(0);
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(c);
    const T is = T(1) / std::sqrt(var + eps);
    inv_sigma[i] = is;
    for (std::size_t j = 0; j < c; ++j) xhat[i * c + j] = (row[j] - mean) * is;
  }
}

// dx = (1/sigma) (dxhat - mean(dxhat) - xhat mean(dxhat xhat))
template <typename T>
void normalize_rows_backward(const T* dxhat, const std::vector<T>& xhat, const std::vector<T>& inv_sigma,
                             std::size_t r, std::size_t c, T* dx) {
  for (std::size_t i = 0; i < r; ++i) {
    const T* g = dxhat + i * c;
    const T* xh = xhat.data() + i * c;
    T mg = T(0), mgx = T(0);
    for (std::size_t j = 0; j < c; ++j) {
      mg += g[j];
      mgx += g[j] * xh[j];
    }
    mg /= static_cast<T>(c);
    mgx /= static_cast<T>(c);
    for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += inv_sigma[i] * (g[j] - mg - xh[j] * mgx);
  }
}

}  // namespace

template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& a, T eps) {
  const std::size_t r = a.rows(), c = a.cols();
  if (c == 0) throw DimensionError("layer_norm_rows: no columns");
  auto xhat = std::make_shared<std::vector<T>>();
  auto inv_sigma = std::make_shared<std::vector<T>>();
  normalize_rows(a.values(), r, c, eps, *xhat, *inv_sigma);
  std::vector<T> out = *xhat;
  auto an = a.node();
  return make_result<T>("layer_norm_rows", a.shape(), std::move(out), {an},
                        [an, xhat, inv_sigma, r, c](detail::Node<T>& self) {
                          normalize_rows_backward(self.grad.data(), *xhat, *inv_sigma, r, c, an->grad.data());
                        });
}

template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t r = a.rows(), c = a.cols();
  if (c == 0) throw DimensionError("layer_norm_rows: no columns");
  if (gamma.shape() != Shape{1, c}) shape_error("layer_norm_rows gamma", a.shape(), gamma.shape());
  if (beta.shape() != Shape{1, c}) shape_error("layer_norm_rows beta", a.shape(), beta.shape());
  auto xhat = std::make_shared<std::vector<T>>();
  auto inv_sigma = std::make_shared<std::vector<T>>();
  normalize_rows(a.values(), r, c, eps, *xhat, *inv_sigma);
  std::vector<T> out(r * c);
  const auto gv = gamma.values(), bv = beta.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (*xhat)[i * c + j] * gv[j] + bv[j];
  auto an = a.node(), gn = gamma.node(), bn = beta.node();
  return make_result<T>(
      "layer_norm_rows", a.shape(), std::move(out), {an, gn, bn},
      [an, gn, bn, xhat, inv_sigma, r, c](detail::Node<T>& self) {
        if (gn->requires_grad || bn->requires_grad) {
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              const T g = self.grad[i * c + j];
              if (gn->requires_grad) gn->grad[j] += g * (*xhat)[i * c + j];
              if (bn->requires_grad) bn->grad[j] += g;
            }
        }
        if (an->requires_grad) {
          std::vector<T> dxhat(r * c);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) dxhat[i * c + j] = self.grad[i * c + j] * gn->value[j];
          normalize_rows_backward(dxhat.data(), *xhat, *inv_sigma, r, c, an->grad.data());
        }
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = sigmoid_value(x);
  auto an = a.node();
  return make_result<T>("sigmoid", a.shape(), std::move(out), {an}, [an](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T y = self.value[i];
      an->grad[i] += self.grad[i] * y * (T(1) - y);
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = x > T(0) ? x : T(0);
  auto an = a.node();
  return make_result<T>("relu", a.shape(), std::move(out), {an}, [an](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (an->value[i] > T(0)) an->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = gelu_value(x);
  auto an = a.node();
  return make_result<T>("gelu", a.shape(), std::move(out), {an}, [an](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * gelu_derivative(an->value[i]);
  });
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids) {
  const std::size_t c = table.cols(), n = ids.size();
  std::vector<T> out(n * c);
  const auto v = table.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows())
      throw DimensionError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table " +
                           table.shape().str());
    std::copy_n(v.begin() + static_cast<std::size_t>(ids[i]) * c, c, out.begin() + i * c);
  }
  auto tn = table.node();
  std::vector<std::int32_t> kept(ids.begin(), ids.end());
  return make_result<T>("embedding_lookup", {n, c}, std::move(out), {tn}, [tn, kept, c](detail::Node<T>& self) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const std::size_t row = static_cast<std::size_t>(kept[i]);
      for (std::size_t j = 0; j < c; ++j) tn->grad[row * c + j] += self.grad[i * c + j];
    }
  });
}

template <typename T>
Tensor<T> map_elementwise(const Tensor<T>& a, std::function<T(T)> f, std::function<T(T)> df, const char* name) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = f(x);
  auto an = a.node();
  return make_result<T>(name, a.shape(), std::move(out), {an}, [an, df](detail::Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * df(an->value[i]);
  });
}

#define LOGIFORMER_INSTANTIATE(T)                                                                       \
  template class Tensor<T>;                                                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> transpose(const Tensor<T>&);                                                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> scale(const Tensor<T>&, T);                                                        \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                   \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul_col(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> concat_cols(std::span<const Tensor<T>>);                                           \
  template Tensor<T> concat_rows(std::span<const Tensor<T>>);                                           \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                            \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                            \
  template Tensor<T> mean_rows(const Tensor<T>&);                                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                             \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                    \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                                \
  template Tensor<T> layer_norm_rows(const Tensor<T>&, T);                                              \
  template Tensor<T> layer_norm_rows(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);          \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                         \
  template Tensor<T> relu(const Tensor<T>&);                                                            \
  template Tensor<T> gelu(const Tensor<T>&);                                                            \
  template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const std::int32_t>);                 \
  template Tensor<T> map_elementwise(const Tensor<T>&, std::function<T(T)>, std::function<T(T)>, const char*);

LOGIFORMER_INSTANTIATE(float)
LOGIFORMER_INSTANTIATE(double)

#undef LOGIFORMER_INSTANTIATE

}  // namespace logiformer
