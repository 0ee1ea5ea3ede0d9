#pragma once

// Optimization, evaluation and model checkpoints.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/model.hpp"

namespace logiformer {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Precision { kF32, kF64 };

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 13;
  double clip_norm = 1.0;  // 0 disables clipping
  Precision precision = Precision::kF32;
  std::size_t eval_threads = 1;

  bool operator==(const TrainConfig&) const = default;
};

/// Batch 2, 12 epochs, peak lr 5e-6, H = 5, L = 5, max length 256.
TrainConfig paper_config();

/// Flat "key = value" lines; '#' starts a comment. Unknown keys and
/// out-of-range values are errors.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
std::string format_train_config(const TrainConfig& config);
/// Throws std::invalid_argument on a violated invariant.
void validate(const TrainConfig& config);

/// Piecewise-linear schedule: 0 -> peak over the warmup steps, then peak -> 0
/// at `total_steps`.
double learning_rate_at(std::size_t step, std::size_t total_steps, double warmup_fraction, double peak);

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Tensor<T>> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // running accuracy during the epoch
  double valid_accuracy = 0.0;
  double seconds = 0.0;
};

struct Metrics {
  std::string split;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> predictions;
  std::vector<EpochMetrics> history;
};

nlohmann::json to_json(const Metrics& m);

/// Argmax accuracy with no-grad forward passes; shards across
/// `threads` workers (results are independent of the thread count).
template <typename T>
Metrics evaluate(const Logiformer<T>& model, const std::vector<PreparedExample>& data, std::size_t threads = 1,
                 const std::string& split = "eval");

using EpochCallback = std::function<void(const EpochMetrics&)>;

struct TrainResult {
  Metrics history;  // per-epoch curve; accuracy is the running train accuracy of the best epoch
  std::size_t best_epoch = 0;
  double best_valid_accuracy = -1.0;
};

/// Single-threaded, deterministic given config.seed. After return the model
/// holds the parameters of the epoch with the best validation accuracy
/// (earliest on ties). Throws TrainingError on a non-finite loss.
template <typename T>
TrainResult train(Logiformer<T>& model, const TrainConfig& config, const std::vector<PreparedExample>& train_data,
                  const std::vector<PreparedExample>& valid_data, const EpochCallback& on_epoch = {});

/// Model checkpoint: config, vocabulary and parameters in one JSON document
/// (format "logiformer-model", version 1). A plain vocabulary file is written
/// next to it as "<path>.vocab".
template <typename T>
void save_model(const std::filesystem::path& path, const Logiformer<T>& model, const TrainConfig& config,
                const Vocabulary& vocab);

struct LoadedModelInfo {
  TrainConfig config;
  Vocabulary vocab;
  nlohmann::json parameters;
};
LoadedModelInfo read_model_file(const std::filesystem::path& path);

template <typename T>
Logiformer<T> instantiate(const LoadedModelInfo& info);

}  // namespace logiformer
