#include "logiformer/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace logiformer {

template <typename T>
Tensor<T> broadcast_nodes_to_tokens(const Tensor<T>& branch, std::span<const TokenRange> alignment, std::size_t n) {
  if (alignment.size() != branch.rows())
    throw DimensionError("broadcast_nodes_to_tokens: " + std::to_string(alignment.size()) + " intervals for " +
                         std::to_string(branch.rows()) + " nodes");
  std::vector<T> selector(n * alignment.size(), T(0));
  std::vector<bool> owned(n, false);
  for (std::size_t k = 0; k < alignment.size(); ++k) {
    const auto& r = alignment[k];
    if (r.end > n) throw DimensionError("broadcast_nodes_to_tokens: interval beyond sequence length");
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (owned[i]) throw std::invalid_argument("broadcast_nodes_to_tokens: overlapping node intervals");
      owned[i] = true;
      selector[i * alignment.size() + k] = T(1);
    }
  }
  if (alignment.empty()) return Tensor<T>::zeros(n, branch.cols());
  return matmul(Tensor<T>(Shape{n, alignment.size()}, std::move(selector)), branch);
}

template <typename T>
Tensor<T> dynamic_gate(const Tensor<T>& occ, const Tensor<T>& cas, const Tensor<T>& w_gate, const Tensor<T>& b_gate,
                       GateMode mode) {
  if (occ.shape() != cas.shape()) throw DimensionError("dynamic_gate: " + occ.shape().str() + " vs " + cas.shape().str());
  const std::size_t n = occ.rows();
  if (mode == GateMode::kFixedHalf) return Tensor<T>::full(n, 1, T(0.5));
  if (b_gate.rows() < n) throw DimensionError("dynamic_gate: gate bias shorter than sequence");
  const Tensor<T> both[] = {occ, cas};
  const auto logits = add(matmul(concat_cols<T>(both), w_gate), slice_rows(b_gate, 0, n));
  if (mode == GateMode::kLogistic) return sigmoid(logits);
  return slice_cols(softmax_rows(logits), 0, 1);
}

template <typename T>
Tensor<T> fuse(const Tensor<T>& vt, const Tensor<T>& occ, const Tensor<T>& cas, const Tensor<T>& lambda,
               const LayerNorm<T>& ln) {
  // lambda * occ + (1 - lambda) * cas = cas + lambda * (occ - cas)
  const auto blended = add(cas, mul_col(sub(occ, cas), lambda));
  return ln(add(vt, blended));
}

template <typename T>
Tensor<T> update_global(const Tensor<T>& vt_cls, const Tensor<T>& occ, const Tensor<T>& cas, const LayerNorm<T>& ln) {
  const std::size_t n = occ.rows();
  if (n < 2) throw std::invalid_argument("update_global: needs at least 2 tokens");
  const auto local = mean_rows(slice_rows(add(occ, cas), 1, n));
  return ln(add(vt_cls, local));
}

template <typename T>
Tensor<T> question_attention(const Tensor<T>& vq, const Tensor<T>& v) {
  if (vq.rows() == 0) throw std::invalid_argument("question_attention: empty question");
  return scaled_dot_attention(vq, v, v, static_cast<const Tensor<T>*>(nullptr));
}

template <typename T>
Tensor<T> assemble_final(const Tensor<T>& cls, const Tensor<T>& context, const Tensor<T>& option,
                         const Tensor<T>& question) {
  const Tensor<T> parts[] = {cls, context, option, question};
  return concat_rows<T>(parts);
}

std::size_t predict(std::span<const double> scores) {
  if (scores.size() < 2) throw std::invalid_argument("predict: needs at least 2 scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

template <typename T>
Decoder<T>::Decoder(ParameterStore<T>& store, const DecoderConfig& config, std::mt19937_64& rng) : config_(config) {
  const std::size_t width = config.gate == GateMode::kTwoLogitSoftmax ? 2 : 1;
  if (config.gate != GateMode::kFixedHalf) {
    w_gate_ = store.glorot("decoder.gate.weight", 2 * config.d, width, rng);
    b_gate_ = store.zeros("decoder.gate.bias", config.max_len, width);
  }
  ln_fuse_ = LayerNorm<T>::create(store, "decoder.ln_fuse", config.d);
  ln_global_ = LayerNorm<T>::create(store, "decoder.ln_global", config.d);
  head_hidden_ = Linear<T>::create(store, "decoder.head.hidden", config.d, config.d, rng);
  head_out_ = Linear<T>::create(store, "decoder.head.out", config.d, 1, rng);
}

template <typename T>
DecoderOutput<T> Decoder<T>::forward(const DecoderInput<T>& in) const {
  const std::size_t n = in.vt.rows();
  DecoderOutput<T> out;
  out.lambda = dynamic_gate(in.occ, in.cas, w_gate_, b_gate_, config_.gate);
  const auto fused = fuse(in.vt, in.occ, in.cas, out.lambda, ln_fuse_);
  const auto cls = update_global(slice_rows(in.vt, 0, 1), in.occ, in.cas, ln_global_);
  const Tensor<T> with_global[] = {cls, slice_rows(fused, 1, n)};
  out.fused = concat_rows<T>(with_global);

  const auto vq = slice_rows(in.vt, in.question.begin, in.question.end);
  const auto question = config_.question_attention ? question_attention(vq, out.fused) : vq;
  out.final_features = assemble_final(cls, slice_rows(out.fused, in.context.begin, in.context.end),
                                      slice_rows(out.fused, in.option.begin, in.option.end), question);

  const auto pooled = config_.pooling == Pooling::kClsRow ? slice_rows(out.final_features, 0, 1)
                                                          : mean_rows(out.final_features);
  out.score = head_out_(gelu(head_hidden_(pooled)));
  return out;
}

#define LOGIFORMER_INSTANTIATE(T)                                                                               \
  template Tensor<T> broadcast_nodes_to_tokens(const Tensor<T>&, std::span<const TokenRange>, std::size_t);     \
  template Tensor<T> dynamic_gate(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, GateMode); \
  template Tensor<T> fuse(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const LayerNorm<T>&); \
  template Tensor<T> update_global(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const LayerNorm<T>&);  \
  template Tensor<T> question_attention(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> assemble_final(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template class Decoder<T>;

LOGIFORMER_INSTANTIATE(float)
LOGIFORMER_INSTANTIATE(double)

#undef LOGIFORMER_INSTANTIATE

}  // namespace logiformer
