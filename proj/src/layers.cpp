#include "logiformer/layers.hpp"

#include <cmath>

namespace logiformer {

template <typename T>
Linear<T> Linear<T>::create(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                            std::mt19937_64& rng, bool with_bias) {
  Linear l;
  l.weight = store.glorot(name + ".weight", in, out, rng);
  l.has_bias = with_bias;
  if (with_bias) l.bias = store.zeros(name + ".bias", 1, out);
  return l;
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  auto y = matmul(x, weight);
  return has_bias ? add_row(y, bias) : y;
}

template <typename T>
LayerNorm<T> LayerNorm<T>::create(ParameterStore<T>& store, const std::string& name, std::size_t d) {
  return {store.constant(name + ".gamma", 1, d, T(1)), store.zeros(name + ".beta", 1, d)};
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return layer_norm_rows(x, gamma, beta, static_cast<T>(kLayerNormEps));
}

template <typename T>
FeedForward<T> FeedForward<T>::create(ParameterStore<T>& store, const std::string& name, std::size_t d,
                                      std::size_t hidden, std::mt19937_64& rng) {
  FeedForward f;
  f.up = Linear<T>::create(store, name + ".up", d, hidden, rng);
  f.down = Linear<T>::create(store, name + ".down", hidden, d, rng);
  return f;
}

template <typename T>
Tensor<T> FeedForward<T>::operator()(const Tensor<T>& x) const {
  return down(gelu(up(x)));
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const Tensor<T>* bias,
                               Tensor<T>* weights_out) {
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.cols())));
  auto logits = scale(matmul(q, transpose(k)), inv_sqrt);
  if (bias != nullptr) logits = add(logits, *bias);
  auto weights = softmax_rows(logits);
  if (weights_out != nullptr) *weights_out = weights;
  return matmul(weights, v);
}

std::vector<double> sinusoid_table(std::size_t rows, std::size_t d) {
  std::vector<double> table(rows * d);
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t j = 0; j < d; ++j) {
      const double exponent = static_cast<double>(j - j % 2) / static_cast<double>(d);
      const double angle = static_cast<double>(p) / std::pow(10000.0, exponent);
      table[p * d + j] = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

template <typename T>
Tensor<T> sinusoid_tensor(std::size_t rows, std::size_t d) {
  const auto table = sinusoid_table(rows, d);
  return Tensor<T>(Shape{rows, d}, std::vector<T>(table.begin(), table.end()));
}

#define LOGIFORMER_INSTANTIATE(T)                                                                           \
  template struct Linear<T>;                                                                                \
  template struct LayerNorm<T>;                                                                             \
  template struct FeedForward<T>;                                                                           \
  template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, \
                                          Tensor<T>*);                                                      \
  template Tensor<T> sinusoid_tensor<T>(std::size_t, std::size_t);

LOGIFORMER_INSTANTIATE(float)
LOGIFORMER_INSTANTIATE(double)

#undef LOGIFORMER_INSTANTIATE

}  // namespace logiformer
