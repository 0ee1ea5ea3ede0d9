#include "logiformer/parameters.hpp"

#include <cmath>
#include <fstream>

namespace logiformer {

template <typename T>
Tensor<T> ParameterStore<T>::add(const std::string& name, Tensor<T> tensor) {
  if (name.empty()) throw std::invalid_argument("parameter name is empty");
  if (!tensors_.emplace(name, tensor).second) throw std::invalid_argument("duplicate parameter name: " + name);
  tensor.set_requires_grad(true);
  return tensor;
}

template <typename T>
Tensor<T> ParameterStore<T>::zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, Tensor<T>::zeros(rows, cols));
}

template <typename T>
Tensor<T> ParameterStore<T>::constant(const std::string& name, std::size_t rows, std::size_t cols, T value) {
  return add(name, Tensor<T>::full(rows, cols, value));
}

template <typename T>
Tensor<T> ParameterStore<T>::uniform(const std::string& name, std::size_t rows, std::size_t cols, T bound,
                                     std::mt19937_64& rng) {
  // Drawn from raw 53-bit integers so the stream is identical across
  // standard libraries.
  Tensor<T> t = Tensor<T>::zeros(rows, cols);
  for (auto& v : t.mutable_values()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = static_cast<T>((2.0 * u - 1.0) * static_cast<double>(bound));
  }
  return add(name, t);
}

template <typename T>
Tensor<T> ParameterStore<T>::glorot(const std::string& name, std::size_t rows, std::size_t cols,
                                    std::mt19937_64& rng) {
  const T bound = static_cast<T>(std::sqrt(6.0 / static_cast<double>(rows + cols)));
  return uniform(name, rows, cols, bound, rng);
}

template <typename T>
const Tensor<T>& ParameterStore<T>::at(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
Tensor<T>& ParameterStore<T>::at(const std::string& name) {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
std::vector<Tensor<T>> ParameterStore<T>::list() const {
  std::vector<Tensor<T>> out;
  for (const auto& [_, t] : tensors_) out.push_back(t);
  return out;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

template <typename T>
nlohmann::json values_to_json(std::span<const T> values) {
  auto arr = nlohmann::json::array();
  for (T v : values) arr.push_back(static_cast<double>(v));
  return arr;
}

template <typename T>
nlohmann::json ParameterStore<T>::to_json() const {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : tensors_) {
    params[name] = {{"shape", {t.rows(), t.cols()}}, {"values", values_to_json(t.values())}};
  }
  return {{"format", kParameterFormat},
          {"version", kParameterFormatVersion},
          {"precision", precision_name<T>()},
          {"parameters", std::move(params)}};
}

template <typename T>
void ParameterStore<T>::load_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kParameterFormat) throw CheckpointError("not a parameter checkpoint");
    if (j.at("version") != kParameterFormatVersion)
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    const auto& params = j.at("parameters");
    for (const auto& [name, _] : params.items())
      if (!tensors_.count(name)) throw CheckpointError("checkpoint has unknown parameter " + name);
    for (auto& [name, t] : tensors_) {
      if (!params.contains(name)) throw CheckpointError("checkpoint is missing parameter " + name);
      const auto& entry = params.at(name);
      const auto shape = entry.at("shape").template get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
        throw CheckpointError("shape mismatch for " + name + ": expected " + t.shape().str());
      const auto& values = entry.at("values");
      if (values.size() != t.size()) throw CheckpointError("value count mismatch for " + name);
      auto dst = t.mutable_values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(values[i].template get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

template <typename T>
void ParameterStore<T>::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

template <typename T>
void ParameterStore<T>::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  load_json(j);
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template nlohmann::json values_to_json<float>(std::span<const float>);
template nlohmann::json values_to_json<double>(std::span<const double>);

}  // namespace logiformer
