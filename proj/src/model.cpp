#include "logiformer/model.hpp"

#include <stdexcept>

namespace logiformer {

NLOHMANN_JSON_SERIALIZE_ENUM(GateMode, {{GateMode::kLogistic, "logistic"},
                                        {GateMode::kTwoLogitSoftmax, "softmax2"},
                                        {GateMode::kFixedHalf, "fixed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Pooling, {{Pooling::kClsRow, "cls"}, {Pooling::kMean, "mean"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BranchFusion, {{BranchFusion::kSum, "sum"},
                                            {BranchFusion::kLastOnly, "last"},
                                            {BranchFusion::kMean, "mean"}})
NLOHMANN_JSON_SERIALIZE_ENUM(NodePositions, {{NodePositions::kSinusoidal, "sinusoidal"},
                                             {NodePositions::kLearned, "learned"}})

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"heads", c.heads},
          {"layers", c.layers},
          {"encoder_blocks", c.encoder_blocks},
          {"encoder_heads", c.encoder_heads},
          {"max_len", c.max_len},
          {"delta", c.delta},
          {"use_logic_bias", c.use_logic_bias},
          {"use_syntax_bias", c.use_syntax_bias},
          {"gate", c.gate},
          {"pooling", c.pooling},
          {"question_attention", c.question_attention},
          {"fusion", c.fusion},
          {"node_positions", c.node_positions}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.at("d").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.encoder_blocks = j.at("encoder_blocks").get<std::size_t>();
  c.encoder_heads = j.at("encoder_heads").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.delta = j.at("delta").get<double>();
  c.use_logic_bias = j.at("use_logic_bias").get<bool>();
  c.use_syntax_bias = j.at("use_syntax_bias").get<bool>();
  c.gate = j.at("gate").get<GateMode>();
  c.pooling = j.at("pooling").get<Pooling>();
  c.question_attention = j.at("question_attention").get<bool>();
  c.fusion = j.at("fusion").get<BranchFusion>();
  c.node_positions = j.at("node_positions").get<NodePositions>();
  return c;
}

PreparedOption prepare_option(const std::string& context, const std::string& question, const std::string& option,
                              const Vocabulary& vocab, const LexiconSet& lexicon, std::size_t max_len, double delta) {
  PreparedOption p;
  p.sequence = build_input(context, question, option, vocab, lexicon, max_len);
  p.logic = build_logic_graph(p.sequence.units);
  p.syntax = build_syntax_graph(p.sequence.sentence_nodes, lexicon.stop_words(), delta);
  return p;
}

PreparedExample prepare_example(const ExampleRecord& record, const Vocabulary& vocab, const LexiconSet& lexicon,
                                std::size_t max_len, double delta) {
  PreparedExample ex;
  ex.id = record.id;
  ex.label = record.label;
  for (const auto& option : record.options)
    ex.options.push_back(prepare_option(record.context, record.question, option, vocab, lexicon, max_len, delta));
  return ex;
}

template <typename T>
Logiformer<T>::Logiformer(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  std::mt19937_64 rng(seed);
  encoder_ = TokenEncoder<T>(store_, {config.d, config.encoder_heads, config.encoder_blocks, config.max_len},
                             vocab_size, rng);
  const GraphTransformerConfig branch{config.d, config.heads, config.layers, config.fusion};
  syntax_branch_ = GraphTransformer<T>(store_, "syntax", branch, rng);
  logic_branch_ = GraphTransformer<T>(store_, "logic", branch, rng);
  decoder_ = Decoder<T>(store_, {config.d, config.max_len, config.gate, config.pooling, config.question_attention},
                        rng);
  if (config.node_positions == NodePositions::kLearned)
    learned_node_positions_ = store_.uniform("node_positions", config.max_len, config.d, T(0.1), rng);
}

template <typename T>
Tensor<T> Logiformer<T>::score_option(const PreparedOption& option, OptionTrace<T>* trace) const {
  const auto& seq = option.sequence;
  const std::size_t n = seq.size();
  const auto vt = encoder_.encode(seq.ids);

  auto branch = [&](const GraphTransformer<T>& transformer, std::span<const TokenRange> alignment,
                    const AdjacencyMatrix& adjacency, bool use_bias, AttentionTrace* attention) {
    const std::size_t k = alignment.size();
    if (k == 0) return Tensor<T>::zeros(n, config_.d);
    const auto vo = init_node_features(vt, alignment);
    const auto vi = config_.node_positions == NodePositions::kLearned
                        ? add(vo, slice_rows(learned_node_positions_, 0, k))
                        : add_node_positions(vo);
    const auto m = use_bias ? bias_tensor<T>(adjacency) : Tensor<T>::zeros(k, k);
    const auto out = transformer.run(vi, m, attention);
    return broadcast_nodes_to_tokens(out.features, alignment, n);
  };

  const auto occ = branch(syntax_branch_, seq.node_alignment, option.syntax.adjacency, config_.use_syntax_bias,
                          trace ? &trace->syntax : nullptr);
  const auto cas = branch(logic_branch_, seq.unit_alignment, option.logic.adjacency, config_.use_logic_bias,
                          trace ? &trace->logic : nullptr);
  const auto out = decoder_.forward({vt, occ, cas, seq.spans.context, seq.spans.question, seq.spans.option});
  if (trace != nullptr) trace->lambda.assign(out.lambda.values().begin(), out.lambda.values().end());
  return out.score;
}

template <typename T>
Tensor<T> Logiformer<T>::scores(const PreparedExample& example) const {
  std::vector<Tensor<T>> parts;
  for (const auto& option : example.options) parts.push_back(score_option(option));
  return transpose(concat_rows<T>(parts));
}

template <typename T>
Tensor<T> Logiformer<T>::loss(const PreparedExample& example) const {
  if (!example.label) throw std::invalid_argument("loss: example " + example.id + " has no label");
  const auto logp = log_softmax_rows(scores(example));
  return scale(slice_cols(logp, *example.label, *example.label + 1), T(-1));
}

template class Logiformer<float>;
template class Logiformer<double>;

}  // namespace logiformer
