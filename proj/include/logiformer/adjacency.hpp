#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace logiformer {

/// Square integer matrix, row-major.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n) : n_(n), data_(n * n, 0) {}

  std::size_t size() const { return n_; }
  int& at(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  int at(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
  const std::vector<int>& data() const { return data_; }

  bool symmetric() const;
  /// Rows as nested vectors, convenient for JSON export.
  std::vector<std::vector<int>> rows() const;

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<int> data_;
};

/// Escapes a string for use inside a double-quoted DOT label.
std::string dot_escape(const std::string& s);

}  // namespace logiformer
