#pragma once

// The full scorer: token encoder, two graph branches, decoder.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/decoder.hpp"
#include "logiformer/encoder.hpp"
#include "logiformer/example.hpp"
#include "logiformer/graph_transformer.hpp"
#include "logiformer/lexicon.hpp"
#include "logiformer/logic_graph.hpp"
#include "logiformer/syntax_graph.hpp"
#include "logiformer/vocabulary.hpp"

namespace logiformer {

enum class NodePositions { kSinusoidal, kLearned };

struct ModelConfig {
  std::size_t d = 64;
  std::size_t heads = 2;          // graph transformer heads
  std::size_t layers = 2;         // graph transformer layers
  std::size_t encoder_blocks = 2;
  std::size_t encoder_heads = 2;
  std::size_t max_len = kDefaultMaxSeqLen;
  double delta = kDefaultDelta;
  bool use_logic_bias = true;      // add M_cas in the logic branch
  bool use_syntax_bias = true;     // add M_occ in the syntax branch
  GateMode gate = GateMode::kLogistic;
  Pooling pooling = Pooling::kClsRow;
  bool question_attention = true;
  BranchFusion fusion = BranchFusion::kSum;
  NodePositions node_positions = NodePositions::kSinusoidal;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Text-side preprocessing of one option: the encoded sequence plus both
/// graphs. Independent of parameters.
struct PreparedOption {
  EncodedSequence sequence;
  LogicGraph logic;
  SyntaxGraph syntax;
};

struct PreparedExample {
  std::string id;
  std::vector<PreparedOption> options;
  std::optional<std::size_t> label;
};

PreparedOption prepare_option(const std::string& context, const std::string& question, const std::string& option,
                              const Vocabulary& vocab, const LexiconSet& lexicon, std::size_t max_len, double delta);
PreparedExample prepare_example(const ExampleRecord& record, const Vocabulary& vocab, const LexiconSet& lexicon,
                                std::size_t max_len, double delta);

template <typename T>
struct OptionTrace {
  AttentionTrace logic;
  AttentionTrace syntax;
  std::vector<double> lambda;
};

template <typename T>
class Logiformer {
 public:
  Logiformer(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

  /// (1 x 1) score for one option. `trace` collects attention maps and the gate.
  Tensor<T> score_option(const PreparedOption& option, OptionTrace<T>* trace = nullptr) const;
  /// (1 x n) scores.
  Tensor<T> scores(const PreparedExample& example) const;
  /// Cross-entropy of softmax(scores) against the label.
  Tensor<T> loss(const PreparedExample& example) const;

  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }
  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }

 private:
  ModelConfig config_;
  std::size_t vocab_size_;
  ParameterStore<T> store_;
  TokenEncoder<T> encoder_;
  GraphTransformer<T> syntax_branch_;
  GraphTransformer<T> logic_branch_;
  Decoder<T> decoder_;
  Tensor<T> learned_node_positions_;
};

}  // namespace logiformer
