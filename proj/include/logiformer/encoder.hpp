#pragma once

// Input construction and token-level encoding.
//
// A sequence is [CLS] context [SEP] question [SEP] option [SEP]. Logical
// units and sentence nodes are computed over the context and option tokens
// (with a forced boundary at their seam) and aligned to sequence positions.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "logiformer/layers.hpp"
#include "logiformer/lexicon.hpp"
#include "logiformer/parameters.hpp"
#include "logiformer/segmenter.hpp"
#include "logiformer/tensor.hpp"
#include "logiformer/vocabulary.hpp"

namespace logiformer {

inline constexpr std::size_t kDefaultMaxSeqLen = 256;

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sequence-position spans. Each text segment includes its trailing [SEP],
/// so cls, context, question and option partition [0, N).
struct SegmentSpans {
  TokenRange cls;
  TokenRange context;
  TokenRange question;
  TokenRange option;
};

struct EncodedSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::string> tokens;  // lowercased surfaces, specials as "[CLS]" etc.
  SegmentSpans spans;
  std::size_t dropped_context_tokens = 0;

  /// Logical units over context + option; token indices refer to
  /// `units.source_tokens`, not sequence positions.
  SegmentationResult units;
  std::vector<LogicalUnit> sentence_nodes;
  /// Sequence-position interval of each logical unit / sentence node.
  std::vector<TokenRange> unit_alignment;
  std::vector<TokenRange> node_alignment;

  std::size_t size() const { return ids.size(); }
};

/// Builds one option's sequence. The context is truncated from its end when
/// the whole sequence would exceed `max_len`; question and option are kept
/// intact, and an InputError is raised if they alone do not fit.
EncodedSequence build_input(const std::string& context, const std::string& question, const std::string& option,
                            const Vocabulary& vocab, const LexiconSet& lexicon,
                            std::size_t max_len = kDefaultMaxSeqLen);

struct EncoderConfig {
  std::size_t d = 64;
  std::size_t heads = 2;
  std::size_t blocks = 2;
  std::size_t max_len = kDefaultMaxSeqLen;
};

/// Embedding + sinusoidal positions + pre-norm transformer blocks with
/// head width d / heads, then a final layer norm.
template <typename T>
class TokenEncoder {
 public:
  TokenEncoder() = default;
  TokenEncoder(ParameterStore<T>& store, const EncoderConfig& config, std::size_t vocab_size,
               std::mt19937_64& rng);

  /// (ids.size() x d).
  Tensor<T> encode(std::span<const std::int32_t> ids) const;
  const EncoderConfig& config() const { return config_; }

 private:
  struct Block {
    LayerNorm<T> ln_attention;
    Linear<T> query, key, value, output;
    LayerNorm<T> ln_ffn;
    FeedForward<T> ffn;
  };

  EncoderConfig config_;
  Tensor<T> embedding_;
  Tensor<T> positions_;
  std::vector<Block> blocks_;
  LayerNorm<T> final_ln_;
};

/// Row k is the mean of the rows of `vt` inside `intervals[k]`.
template <typename T>
Tensor<T> init_node_features(const Tensor<T>& vt, std::span<const TokenRange> intervals);

/// vo plus the sinusoidal table over node index.
template <typename T>
Tensor<T> add_node_positions(const Tensor<T>& vo);

}  // namespace logiformer
