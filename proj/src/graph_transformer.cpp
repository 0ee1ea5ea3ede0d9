#include "logiformer/graph_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace logiformer {

std::vector<double> min_max_normalize(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 0.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

nlohmann::json AttentionTrace::to_json(bool normalize) const {
  nlohmann::json maps = nlohmann::json::array();
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      const auto values = normalize ? min_max_normalize(at(l, h)) : at(l, h);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < nodes; ++i)
        rows.push_back(std::vector<double>(values.begin() + i * nodes, values.begin() + (i + 1) * nodes));
      maps.push_back({{"layer", l + 1}, {"head", h + 1}, {"matrix", std::move(rows)}});
    }
  }
  return {{"layers", layers}, {"heads", heads}, {"nodes", nodes}, {"normalized", normalize}, {"maps", std::move(maps)}};
}

void AttentionTrace::write_csv(const std::filesystem::path& dir, bool normalize) const {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      const auto path = dir / ("layer" + std::to_string(l + 1) + "_head" + std::to_string(h + 1) + ".csv");
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      out << std::setprecision(17);
      const auto values = normalize ? min_max_normalize(at(l, h)) : at(l, h);
      for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = 0; j < nodes; ++j) out << (j ? "," : "") << values[i * nodes + j];
        out << '\n';
      }
    }
  }
}

template <typename T>
Tensor<T> bias_tensor(const AdjacencyMatrix& m) {
  std::vector<T> values(m.data().begin(), m.data().end());
  return Tensor<T>(Shape{m.size(), m.size()}, std::move(values));
}

template <typename T>
Tensor<T> biased_attention_logits(const Tensor<T>& q, const Tensor<T>& kmat, const Tensor<T>& m) {
  if (m.rows() != q.rows() || m.cols() != kmat.rows())
    throw DimensionError("biased_attention_logits: bias " + m.shape().str() + " for " + std::to_string(q.rows()) +
                         " queries and " + std::to_string(kmat.rows()) + " keys");
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.cols())));
  return add(scale(matmul(q, transpose(kmat)), inv_sqrt), m);
}

template <typename T>
GraphTransformer<T>::GraphTransformer(ParameterStore<T>& store, const std::string& name,
                                      const GraphTransformerConfig& config, std::mt19937_64& rng)
    : config_(config) {
  if (config.layers < 2) throw ConfigError("graph transformer needs at least 2 layers, got " +
                                           std::to_string(config.layers));
  if (config.heads == 0 || config.d == 0) throw ConfigError("graph transformer needs d > 0 and heads > 0");
  const std::size_t d = config.d;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = name + ".layer" + std::to_string(l);
    GraphLayerParams<T> layer;
    layer.ln_attention = LayerNorm<T>::create(store, p + ".ln_attention", d);
    for (std::size_t h = 0; h < config.heads; ++h) {
      const std::string hp = p + ".head" + std::to_string(h);
      layer.w_query.push_back(store.glorot(hp + ".query", d, d, rng));
      layer.w_key.push_back(store.glorot(hp + ".key", d, d, rng));
      layer.w_value.push_back(store.glorot(hp + ".value", d, d, rng));
    }
    layer.w_heads = store.glorot(p + ".heads", config.heads * d, d, rng);
    layer.ln_ffn = LayerNorm<T>::create(store, p + ".ln_ffn", d);
    layer.ffn = FeedForward<T>::create(store, p + ".ffn", d, 4 * d, rng);
    layers_.push_back(std::move(layer));
  }
}

template <typename T>
Tensor<T> GraphTransformer<T>::layer(const Tensor<T>& x, const Tensor<T>& m, std::size_t index,
                                     AttentionTrace* trace) const {
  const auto& p = layers_.at(index);
  const auto h = p.ln_attention(x);
  std::vector<Tensor<T>> heads;
  for (std::size_t i = 0; i < config_.heads; ++i) {
    const auto logits = biased_attention_logits(matmul(h, p.w_query[i]), matmul(h, p.w_key[i]), m);
    const auto weights = softmax_rows(logits);
    if (trace != nullptr) trace->matrices.emplace_back(weights.values().begin(), weights.values().end());
    heads.push_back(matmul(weights, matmul(h, p.w_value[i])));
  }
  auto y = add(x, matmul(concat_cols<T>(heads), p.w_heads));
  return add(y, p.ffn(p.ln_ffn(y)));
}

template <typename T>
BranchOutput<T> GraphTransformer<T>::run(const Tensor<T>& vi, const Tensor<T>& m, AttentionTrace* trace) const {
  if (trace != nullptr) *trace = AttentionTrace{config_.layers, config_.heads, vi.rows(), {}};
  BranchOutput<T> out;
  Tensor<T> x = vi;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    x = layer(x, m, l, trace);
    out.hidden.push_back(x);
  }
  const auto& last = out.hidden[config_.layers - 1];
  const auto& previous = out.hidden[config_.layers - 2];
  switch (config_.fusion) {
    case BranchFusion::kSum:
      out.features = add(previous, last);
      break;
    case BranchFusion::kLastOnly:
      out.features = last;
      break;
    case BranchFusion::kMean:
      out.features = scale(add(previous, last), T(0.5));
      break;
  }
  return out;
}

template Tensor<float> bias_tensor<float>(const AdjacencyMatrix&);
template Tensor<double> bias_tensor<double>(const AdjacencyMatrix&);
template Tensor<float> biased_attention_logits(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> biased_attention_logits(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template class GraphTransformer<float>;
template class GraphTransformer<double>;

}  // namespace logiformer
