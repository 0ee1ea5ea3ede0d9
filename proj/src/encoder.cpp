#include "logiformer/encoder.hpp"

#include <algorithm>

namespace logiformer {

namespace {

std::vector<Token> shifted(std::vector<Token> tokens, std::size_t offset, std::size_t index_base) {
  for (auto& t : tokens) {
    t.begin += offset;
    t.end += offset;
    t.index += index_base;
  }
  return tokens;
}

// Maps an interval over the joined context+option tokens to sequence
// positions. The seam is a hard break, so no interval crosses it.
TokenRange to_sequence(TokenRange r, std::size_t context_count, std::size_t option_start) {
  if (r.end <= context_count) return {1 + r.begin, 1 + r.end};
  return {option_start + (r.begin - context_count), option_start + (r.end - context_count)};
}

}  // namespace

EncodedSequence build_input(const std::string& context, const std::string& question, const std::string& option,
                            const Vocabulary& vocab, const LexiconSet& lexicon, std::size_t max_len) {
  auto context_tokens = tokenize(context);
  const auto question_tokens = tokenize(question);
  auto option_tokens = tokenize(option);
  if (option_tokens.empty())
    throw InputError(context_tokens.empty() ? "empty context and option" : "empty option");

  const std::size_t fixed = 4 + question_tokens.size() + option_tokens.size();
  if (fixed > max_len)
    throw InputError("question and option need " + std::to_string(fixed) + " positions, max length is " +
                     std::to_string(max_len));
  EncodedSequence seq;
  const std::size_t keep = std::min(context_tokens.size(), max_len - fixed);
  seq.dropped_context_tokens = context_tokens.size() - keep;
  context_tokens.resize(keep);

  auto push = [&](std::int32_t id, const std::string& text) {
    seq.ids.push_back(id);
    seq.tokens.push_back(text);
  };
  auto push_tokens = [&](const std::vector<Token>& tokens) {
    for (const auto& t : tokens) push(vocab.id(t.lower), t.lower);
    push(Vocabulary::kSep, "[SEP]");
  };
  push(Vocabulary::kCls, "[CLS]");
  seq.spans.cls = {0, 1};
  push_tokens(context_tokens);
  seq.spans.context = {1, seq.ids.size()};
  push_tokens(question_tokens);
  seq.spans.question = {seq.spans.context.end, seq.ids.size()};
  push_tokens(option_tokens);
  seq.spans.option = {seq.spans.question.end, seq.ids.size()};

  // Joined source: kept context text, one space, option text.
  const std::size_t context_chars = keep == 0 ? 0 : context_tokens.back().end;
  std::string source = context.substr(0, context_chars) + " " + option;
  std::vector<Token> joined = context_tokens;
  for (auto& t : shifted(option_tokens, context_chars + 1, keep)) joined.push_back(std::move(t));
  const std::vector<std::size_t> breaks{keep};

  seq.sentence_nodes = split_sentence_nodes(source, joined, lexicon, breaks);
  seq.units = split_logical_units(std::move(source), std::move(joined), lexicon, breaks);

  const std::size_t option_start = seq.spans.option.begin;
  for (const auto& u : seq.units.units) seq.unit_alignment.push_back(to_sequence(u.tokens, keep, option_start));
  for (const auto& n : seq.sentence_nodes) seq.node_alignment.push_back(to_sequence(n.tokens, keep, option_start));
  return seq;
}

template <typename T>
TokenEncoder<T>::TokenEncoder(ParameterStore<T>& store, const EncoderConfig& config, std::size_t vocab_size,
                              std::mt19937_64& rng)
    : config_(config) {
  if (config.heads == 0 || config.d % config.heads != 0)
    throw std::invalid_argument("encoder: d must be a multiple of the head count");
  embedding_ = store.uniform("encoder.embedding", vocab_size, config.d, T(1), rng);
  positions_ = sinusoid_tensor<T>(config.max_len, config.d);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    const std::string p = "encoder.block" + std::to_string(b);
    Block block;
    block.ln_attention = LayerNorm<T>::create(store, p + ".ln_attention", config.d);
    block.query = Linear<T>::create(store, p + ".query", config.d, config.d, rng);
    block.key = Linear<T>::create(store, p + ".key", config.d, config.d, rng);
    block.value = Linear<T>::create(store, p + ".value", config.d, config.d, rng);
    block.output = Linear<T>::create(store, p + ".output", config.d, config.d, rng);
    block.ln_ffn = LayerNorm<T>::create(store, p + ".ln_ffn", config.d);
    block.ffn = FeedForward<T>::create(store, p + ".ffn", config.d, 4 * config.d, rng);
    blocks_.push_back(block);
  }
  final_ln_ = LayerNorm<T>::create(store, "encoder.ln_final", config.d);
}

template <typename T>
Tensor<T> TokenEncoder<T>::encode(std::span<const std::int32_t> ids) const {
  if (ids.size() > config_.max_len)
    throw InputError("sequence of " + std::to_string(ids.size()) + " exceeds max length " +
                     std::to_string(config_.max_len));
  auto x = add(embedding_lookup(embedding_, ids), slice_rows(positions_, 0, ids.size()));
  const std::size_t hd = config_.d / config_.heads;
  for (const auto& block : blocks_) {
    const auto h = block.ln_attention(x);
    const auto q = block.query(h), k = block.key(h), v = block.value(h);
    std::vector<Tensor<T>> heads;
    for (std::size_t i = 0; i < config_.heads; ++i) {
      heads.push_back(scaled_dot_attention(slice_cols(q, i * hd, (i + 1) * hd), slice_cols(k, i * hd, (i + 1) * hd),
                                           slice_cols(v, i * hd, (i + 1) * hd), static_cast<const Tensor<T>*>(nullptr)));
    }
    x = add(x, block.output(concat_cols<T>(heads)));
    x = add(x, block.ffn(block.ln_ffn(x)));
  }
  return final_ln_(x);
}

template <typename T>
Tensor<T> init_node_features(const Tensor<T>& vt, std::span<const TokenRange> intervals) {
  const std::size_t n = vt.rows();
  std::vector<T> averaging(intervals.size() * n, T(0));
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const auto& r = intervals[k];
    if (r.empty()) throw std::invalid_argument("init_node_features: node " + std::to_string(k + 1) + " is empty");
    if (r.end > n) throw DimensionError("init_node_features: node interval beyond sequence length");
    const T w = T(1) / static_cast<T>(r.size());
    for (std::size_t i = r.begin; i < r.end; ++i) averaging[k * n + i] = w;
  }
  return matmul(Tensor<T>(Shape{intervals.size(), n}, std::move(averaging)), vt);
}

template <typename T>
Tensor<T> add_node_positions(const Tensor<T>& vo) {
  return add(vo, sinusoid_tensor<T>(vo.rows(), vo.cols()));
}

template class TokenEncoder<float>;
template class TokenEncoder<double>;
template Tensor<float> init_node_features(const Tensor<float>&, std::span<const TokenRange>);
template Tensor<double> init_node_features(const Tensor<double>&, std::span<const TokenRange>);
template Tensor<float> add_node_positions(const Tensor<float>&);
template Tensor<double> add_node_positions(const Tensor<double>&);

}  // namespace logiformer
