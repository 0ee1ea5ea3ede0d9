#pragma once

// Parameterized building blocks shared by the token encoder, the graph
// branches and the decoder.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "logiformer/parameters.hpp"
#include "logiformer/tensor.hpp"

namespace logiformer {

inline constexpr double kLayerNormEps = 1e-5;

/// y = x W (+ b). W is (in x out), b is (1 x out).
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;
  bool has_bias = false;

  static Linear create(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng, bool with_bias = true);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// Row-wise layer normalization with per-column affine.
template <typename T>
struct LayerNorm {
  Tensor<T> gamma;
  Tensor<T> beta;

  static LayerNorm create(ParameterStore<T>& store, const std::string& name, std::size_t d);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// Position-wise d -> hidden -> d with GELU.
template <typename T>
struct FeedForward {
  Linear<T> up;
  Linear<T> down;

  static FeedForward create(ParameterStore<T>& store, const std::string& name, std::size_t d, std::size_t hidden,
                            std::mt19937_64& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// softmax(Q K^T / sqrt(d_k) + bias) V. `bias` may be null. When
/// `weights_out` is given it receives the post-softmax matrix.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const Tensor<T>* bias,
                               Tensor<T>* weights_out = nullptr);

/// Sinusoidal table: entry (p, 2i) = sin(p / 10000^(2i/d)), (p, 2i+1) = cos(same).
std::vector<double> sinusoid_table(std::size_t rows, std::size_t d);

template <typename T>
Tensor<T> sinusoid_tensor(std::size_t rows, std::size_t d);

}  // namespace logiformer
