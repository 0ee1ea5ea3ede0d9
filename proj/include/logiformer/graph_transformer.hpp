#pragma once

// Graph transformer branch: fully connected multi-head attention over graph
// nodes with the branch adjacency added to every head's logits.

#include <cstddef>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/adjacency.hpp"
#include "logiformer/layers.hpp"
#include "logiformer/parameters.hpp"
#include "logiformer/tensor.hpp"

namespace logiformer {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How the last two layers' hidden states are combined.
enum class BranchFusion { kSum, kLastOnly, kMean };

struct GraphTransformerConfig {
  std::size_t d = 64;
  std::size_t heads = 2;
  std::size_t layers = 2;
  BranchFusion fusion = BranchFusion::kSum;
};

/// Post-softmax K x K attention per layer and head, row-major.
struct AttentionTrace {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t nodes = 0;
  std::vector<std::vector<double>> matrices;  // index layer * heads + head

  const std::vector<double>& at(std::size_t layer, std::size_t head) const { return matrices[layer * heads + head]; }
  nlohmann::json to_json(bool normalize = false) const;
  /// Writes layer<l>_head<h>.csv (1-based) into `dir`.
  void write_csv(const std::filesystem::path& dir, bool normalize = false) const;
};

/// Maps values to [0, 1] by (v - min) / (max - min); a constant matrix maps
/// to zeros.
std::vector<double> min_max_normalize(const std::vector<double>& values);

/// The adjacency as a (K x K) numeric tensor.
template <typename T>
Tensor<T> bias_tensor(const AdjacencyMatrix& m);

/// Q Kmat^T / sqrt(d_k) + M.
template <typename T>
Tensor<T> biased_attention_logits(const Tensor<T>& q, const Tensor<T>& kmat, const Tensor<T>& m);

template <typename T>
struct GraphLayerParams {
  LayerNorm<T> ln_attention;
  std::vector<Tensor<T>> w_query, w_key, w_value;  // per head, (d x d)
  Tensor<T> w_heads;                               // (H d x d)
  LayerNorm<T> ln_ffn;
  FeedForward<T> ffn;
};

template <typename T>
struct BranchOutput {
  Tensor<T> features;                  // (K x d)
  std::vector<Tensor<T>> hidden;       // per layer, (K x d)
};

template <typename T>
class GraphTransformer {
 public:
  GraphTransformer() = default;
  /// Parameters are registered as "<name>.layer<l>.*".
  GraphTransformer(ParameterStore<T>& store, const std::string& name, const GraphTransformerConfig& config,
                   std::mt19937_64& rng);

  /// One pre-norm block: LN, biased multi-head attention, residual, LN,
  /// feed-forward, residual.
  Tensor<T> layer(const Tensor<T>& x, const Tensor<T>& m, std::size_t index, AttentionTrace* trace = nullptr) const;
  /// All layers; features combine the last two hidden states.
  BranchOutput<T> run(const Tensor<T>& vi, const Tensor<T>& m, AttentionTrace* trace = nullptr) const;

  const GraphTransformerConfig& config() const { return config_; }
  const std::vector<GraphLayerParams<T>>& layer_params() const { return layers_; }

 private:
  GraphTransformerConfig config_;
  std::vector<GraphLayerParams<T>> layers_;
};

}  // namespace logiformer
