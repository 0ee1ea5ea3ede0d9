#pragma once

// Decoder: broadcasts branch node features back to tokens, blends them with
// a per-token gate, rebuilds the global feature, lets the question attend to
// the fused sequence and scores the option.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "logiformer/layers.hpp"
#include "logiformer/parameters.hpp"
#include "logiformer/segmenter.hpp"
#include "logiformer/tensor.hpp"

namespace logiformer {

/// kLogistic: lambda = sigmoid(x W_g + b_g), W_g is (2d x 1).
/// kTwoLogitSoftmax: W_g is (2d x 2), lambda is the first softmax entry.
/// kFixedHalf: lambda = 0.5 everywhere (gate ablation).
enum class GateMode { kLogistic, kTwoLogitSoftmax, kFixedHalf };

/// Which rows of V_final feed the scoring head.
enum class Pooling { kClsRow, kMean };

struct DecoderConfig {
  std::size_t d = 64;
  std::size_t max_len = 256;
  GateMode gate = GateMode::kLogistic;
  Pooling pooling = Pooling::kClsRow;
  bool question_attention = true;
};

/// (n x d): token i receives row k of `branch` when i lies in alignment[k];
/// other tokens receive zeros. Overlapping intervals are a contract error.
template <typename T>
Tensor<T> broadcast_nodes_to_tokens(const Tensor<T>& branch, std::span<const TokenRange> alignment, std::size_t n);

/// lambda (n x 1). `w_gate` is (2d x 1) or (2d x 2) per `mode`; `b_gate`
/// holds at least n rows of matching width.
template <typename T>
Tensor<T> dynamic_gate(const Tensor<T>& occ, const Tensor<T>& cas, const Tensor<T>& w_gate, const Tensor<T>& b_gate,
                       GateMode mode);

/// LN(vt + lambda * occ + (1 - lambda) * cas), lambda broadcast across columns.
template <typename T>
Tensor<T> fuse(const Tensor<T>& vt, const Tensor<T>& occ, const Tensor<T>& cas, const Tensor<T>& lambda,
               const LayerNorm<T>& ln);

/// LN(vt_cls + mean over rows 1..n-1 of (occ + cas)). Requires n >= 2.
template <typename T>
Tensor<T> update_global(const Tensor<T>& vt_cls, const Tensor<T>& occ, const Tensor<T>& cas, const LayerNorm<T>& ln);

/// softmax(vq V^T / sqrt(d)) V.
template <typename T>
Tensor<T> question_attention(const Tensor<T>& vq, const Tensor<T>& v);

/// Row concatenation [cls; context; option; question].
template <typename T>
Tensor<T> assemble_final(const Tensor<T>& cls, const Tensor<T>& context, const Tensor<T>& option,
                         const Tensor<T>& question);

/// Index of the largest score; ties go to the lowest index.
std::size_t predict(std::span<const double> scores);

/// Sequence-level inputs to the decoder for one option.
template <typename T>
struct DecoderInput {
  Tensor<T> vt;   // (N x d) token features
  Tensor<T> occ;  // (N x d) broadcast syntax-branch features
  Tensor<T> cas;  // (N x d) broadcast logic-branch features
  TokenRange context, question, option;
};

template <typename T>
struct DecoderOutput {
  Tensor<T> score;   // (1 x 1)
  Tensor<T> lambda;  // (N x 1)
  Tensor<T> fused;   // V with the global row in place, (N x d)
  Tensor<T> final_features;
};

template <typename T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(ParameterStore<T>& store, const DecoderConfig& config, std::mt19937_64& rng);

  DecoderOutput<T> forward(const DecoderInput<T>& in) const;
  const DecoderConfig& config() const { return config_; }

 private:
  DecoderConfig config_;
  Tensor<T> w_gate_;
  Tensor<T> b_gate_;
  LayerNorm<T> ln_fuse_;
  LayerNorm<T> ln_global_;
  Linear<T> head_hidden_;
  Linear<T> head_out_;
};

}  // namespace logiformer
