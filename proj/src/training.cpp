#include "logiformer/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace logiformer {

NLOHMANN_JSON_SERIALIZE_ENUM(Precision, {{Precision::kF32, "f32"}, {Precision::kF64, "f64"}})

namespace {

constexpr const char* kModelFormat = "logiformer-model";
constexpr int kModelFormatVersion = 1;

nlohmann::json config_to_json(const TrainConfig& c) {
  auto j = to_json(c.model);
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["warmup_fraction"] = c.warmup_fraction;
  j["seed"] = c.seed;
  j["clip_norm"] = c.clip_norm;
  j["precision"] = c.precision;
  j["eval_threads"] = c.eval_threads;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.model = model_config_from_json(j);
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.warmup_fraction = j.at("warmup_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.precision = j.at("precision").get<Precision>();
  c.eval_threads = j.at("eval_threads").get<std::size_t>();
  return c;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Parses `text` as the JSON kind of `current`.
nlohmann::json parse_value(const nlohmann::json& current, const std::string& key, const std::string& text) {
  const auto fail = [&](const char* what) {
    return std::invalid_argument("config key '" + key + "': expected " + what + ", got '" + text + "'");
  };
  if (current.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw fail("true or false");
  }
  if (current.is_string()) return text;
  std::size_t used = 0;
  try {
    if (current.is_number_unsigned() || current.is_number_integer()) {
      if (text.empty() || text[0] == '-') throw fail("a non-negative integer");
      const auto v = std::stoull(text, &used);
      if (used == text.size()) return v;
    } else {
      const auto v = std::stod(text, &used);
      if (used == text.size()) return v;
    }
  } catch (const std::logic_error&) {
  }
  throw fail(current.is_number_float() ? "a number" : "a non-negative integer");
}

template <typename T>
std::vector<std::vector<T>> snapshot(const ParameterStore<T>& store) {
  std::vector<std::vector<T>> out;
  for (const auto& [_, t] : store.tensors()) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

template <typename T>
void restore(ParameterStore<T>& store, const std::vector<std::vector<T>>& values) {
  std::size_t i = 0;
  for (auto [_, t] : store.tensors()) {
    auto dst = t.mutable_values();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
    ++i;
  }
}

template <typename T>
std::size_t predicted_index(const Tensor<T>& scores) {
  std::vector<double> s(scores.values().begin(), scores.values().end());
  return predict(s);
}

void require_labels(const std::vector<PreparedExample>& data, const char* what) {
  for (const auto& ex : data)
    if (!ex.label) throw std::invalid_argument(std::string(what) + ": example " + ex.id + " has no label");
}

}  // namespace

TrainConfig paper_config() {
  TrainConfig c;
  c.batch_size = 2;
  c.epochs = 12;
  c.learning_rate = 5e-6;
  c.model.heads = 5;
  c.model.layers = 5;
  c.model.max_len = 256;
  return c;
}

void validate(const TrainConfig& c) {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be positive");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (c.epochs == 0) fail("epochs must be positive");
  if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0)) fail("warmup_fraction must lie in [0, 1)");
  if (!(c.clip_norm >= 0.0)) fail("clip_norm must be non-negative");
  if (c.eval_threads == 0) fail("eval_threads must be positive");
  const auto& m = c.model;
  if (m.d == 0 || m.heads == 0 || m.encoder_heads == 0 || m.encoder_blocks == 0) fail("model sizes must be positive");
  if (m.d % m.encoder_heads != 0) fail("d must be divisible by encoder_heads");
  if (m.layers < 2) fail("layers must be at least 2");
  if (m.max_len < 8) fail("max_len must be at least 8");
  if (!(m.delta > 0.0 && m.delta < 1.0)) fail("delta must lie in (0, 1)");
}

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  auto j = config_to_json(base);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> string_keys;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (!j.contains(key)) throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    j[key] = parse_value(j[key], key, value);
    if (j[key].is_string()) string_keys.push_back(key);
  }
  TrainConfig c = config_from_json(j);
  // Enum names that do not round-trip are unknown.
  const auto back = config_to_json(c);
  for (const auto& key : string_keys)
    if (back[key] != j[key]) throw std::invalid_argument("config key '" + key + "': unknown value " + j[key].dump());
  validate(c);
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_train_config(s.str(), std::move(base));
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  const auto j = config_to_json(config);
  for (const auto& [key, value] : j.items())
    out += key + " = " + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
  return out;
}

double learning_rate_at(std::size_t step, std::size_t total_steps, double warmup_fraction, double peak) {
  if (total_steps == 0 || step >= total_steps) return 0.0;
  const auto warmup = static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
  const auto s = static_cast<double>(step);
  if (step < warmup) return peak * s / static_cast<double>(warmup);
  return peak * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;
    const auto g = params_[i].grad();
    auto w = params_[i].mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      w[k] = static_cast<T>(w[k] - lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_));
    }
  }
}

template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (const T g : p.grad()) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : params)
      if (p.has_grad())
        for (T& g : p.mutable_grad()) g = static_cast<T>(g * f);
  }
  return norm;
}

nlohmann::json to_json(const Metrics& m) {
  auto history = nlohmann::json::array();
  for (const auto& e : m.history)
    history.push_back({{"epoch", e.epoch},
                       {"mean_loss", e.mean_loss},
                       {"train_accuracy", e.train_accuracy},
                       {"valid_accuracy", e.valid_accuracy}});
  return {{"split", m.split},   {"accuracy", m.accuracy},       {"correct", m.correct},
          {"total", m.total},   {"predictions", m.predictions}, {"history", std::move(history)}};
}

template <typename T>
Metrics evaluate(const Logiformer<T>& model, const std::vector<PreparedExample>& data, std::size_t threads,
                 const std::string& split) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty data");
  require_labels(data, "evaluate");
  Metrics m;
  m.split = split;
  m.total = data.size();
  m.predictions.assign(data.size(), 0);
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, data.size()));
  auto run = [&](std::size_t begin, std::size_t end) {
    NoGradGuard guard;
    for (std::size_t i = begin; i < end; ++i) m.predictions[i] = predicted_index(model.scores(data[i]));
  };
  if (workers == 1) {
    run(0, data.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (data.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(data.size(), w * chunk);
      pool.emplace_back(run, begin, std::min(data.size(), begin + chunk));
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) m.correct += m.predictions[i] == *data[i].label;
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.total);
  return m;
}

template <typename T>
TrainResult train(Logiformer<T>& model, const TrainConfig& config, const std::vector<PreparedExample>& train_data,
                  const std::vector<PreparedExample>& valid_data, const EpochCallback& on_epoch) {
  validate(config);
  if (train_data.empty()) throw std::invalid_argument("train: empty training data");
  require_labels(train_data, "train");
  require_labels(valid_data, "train");

  auto params = model.parameters().list();
  Adam<T> adam(params);
  std::mt19937_64 rng(config.seed);
  const std::size_t n = train_data.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  result.history.split = "train";
  std::vector<std::vector<T>> best;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    // Portable Fisher-Yates: std::shuffle's draws are implementation-defined.
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      model.parameters().zero_grad();
      const T weight = T(1) / static_cast<T>(e - b);
      for (std::size_t i = b; i < e; ++i) {
        const auto& ex = train_data[order[i]];
        const auto scores = model.scores(ex);
        correct += predicted_index(scores) == *ex.label;
        const auto logp = log_softmax_rows(scores);
        const auto loss = scale(slice_cols(logp, *ex.label, *ex.label + 1), T(-1));
        const double value = loss.item();
        if (!std::isfinite(value))
          throw TrainingError("non-finite loss " + std::to_string(value) + " on example " + ex.id + " at epoch " +
                              std::to_string(epoch) + ", step " + std::to_string(step));
        loss_sum += value;
        scale(loss, weight).backward();
      }
      clip_grad_norm(params, config.clip_norm);
      adam.step(learning_rate_at(step, total_steps, config.warmup_fraction, config.learning_rate));
      ++step;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.mean_loss = loss_sum / static_cast<double>(n);
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    em.valid_accuracy = valid_data.empty() ? em.train_accuracy
                                           : evaluate(model, valid_data, config.eval_threads, "valid").accuracy;
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.history.push_back(em);
    if (em.valid_accuracy > result.best_valid_accuracy) {
      result.best_valid_accuracy = em.valid_accuracy;
      result.best_epoch = epoch;
      best = snapshot(model.parameters());
    }
    if (on_epoch) on_epoch(em);
  }
  restore(model.parameters(), best);
  model.parameters().zero_grad();
  const auto& best_epoch = result.history.history[result.best_epoch - 1];
  result.history.accuracy = best_epoch.train_accuracy;
  result.history.total = n;
  result.history.correct = static_cast<std::size_t>(std::lround(best_epoch.train_accuracy * static_cast<double>(n)));
  return result;
}

template <typename T>
void save_model(const std::filesystem::path& path, const Logiformer<T>& model, const TrainConfig& config,
                const Vocabulary& vocab) {
  nlohmann::json j = {{"format", kModelFormat},
                      {"version", kModelFormatVersion},
                      {"config", config_to_json(config)},
                      {"vocabulary", vocab.regular_tokens()},
                      {"parameters", model.parameters().to_json()}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("failed writing " + path.string());
  vocab.save(path.string() + ".vocab");
}

LoadedModelInfo read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format") != kModelFormat) throw CheckpointError(path.string() + " is not a model checkpoint");
    if (j.at("version") != kModelFormatVersion)
      throw CheckpointError("unsupported model checkpoint version " + j.at("version").dump());
    LoadedModelInfo info;
    info.config = config_from_json(j.at("config"));
    info.vocab = Vocabulary::from_tokens(j.at("vocabulary").get<std::vector<std::string>>());
    info.parameters = std::move(j.at("parameters"));
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed model checkpoint " + path.string() + ": " + e.what());
  }
}

template <typename T>
Logiformer<T> instantiate(const LoadedModelInfo& info) {
  Logiformer<T> model(info.config.model, info.vocab.size(), info.config.seed);
  model.parameters().load_json(info.parameters);
  return model;
}

#define LOGIFORMER_INSTANTIATE(T)                                                                                   \
  template class Adam<T>;                                                                                          \
  template double clip_grad_norm<T>(std::vector<Tensor<T>>&, double);                                              \
  template Metrics evaluate<T>(const Logiformer<T>&, const std::vector<PreparedExample>&, std::size_t,             \
                               const std::string&);                                                                \
  template TrainResult train<T>(Logiformer<T>&, const TrainConfig&, const std::vector<PreparedExample>&,           \
                                const std::vector<PreparedExample>&, const EpochCallback&);                        \
  template void save_model<T>(const std::filesystem::path&, const Logiformer<T>&, const TrainConfig&,              \
                              const Vocabulary&);                                                                  \
  template Logiformer<T> instantiate<T>(const LoadedModelInfo&);

LOGIFORMER_INSTANTIATE(float)
LOGIFORMER_INSTANTIATE(double)

}  // namespace logiformer
