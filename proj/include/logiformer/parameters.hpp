#pragma once

// Named trainable tensors and their JSON checkpoint form.
//
// Checkpoint layout (format "logiformer-parameters", version 1):
//   {"format": ..., "version": 1, "precision": "f32" | "f64",
//    "parameters": {"<name>": {"shape": [rows, cols], "values": [...]}}}
// Values are row-major. Names sort lexicographically, so the file text is a
// pure function of the parameter values.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/tensor.hpp"

namespace logiformer {

inline constexpr const char* kParameterFormat = "logiformer-parameters";
inline constexpr int kParameterFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
class ParameterStore {
 public:
  /// Registers a leaf under `name` and marks it trainable. Names are unique.
  Tensor<T> add(const std::string& name, Tensor<T> tensor);
  /// Zero-initialized (rows x cols).
  Tensor<T> zeros(const std::string& name, std::size_t rows, std::size_t cols);
  /// Constant-initialized (rows x cols).
  Tensor<T> constant(const std::string& name, std::size_t rows, std::size_t cols, T value);
  /// Uniform in [-bound, bound].
  Tensor<T> uniform(const std::string& name, std::size_t rows, std::size_t cols, T bound, std::mt19937_64& rng);
  /// Glorot uniform: bound sqrt(6 / (rows + cols)).
  Tensor<T> glorot(const std::string& name, std::size_t rows, std::size_t cols, std::mt19937_64& rng);

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  const std::map<std::string, Tensor<T>>& tensors() const { return tensors_; }
  std::vector<Tensor<T>> list() const;
  std::size_t scalar_count() const;

  void zero_grad();

  nlohmann::json to_json() const;
  /// Copies values from `j` into the registered tensors. Every registered
  /// name must be present with a matching shape; extra names are an error.
  void load_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor<T>> tensors_;
};

/// Serializes a flat value list at full round-trip precision.
template <typename T>
nlohmann::json values_to_json(std::span<const T> values);

}  // namespace logiformer
