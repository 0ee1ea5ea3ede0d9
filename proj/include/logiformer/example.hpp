#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace logiformer {

/// One multiple-choice item: a context passage, a question, candidate
/// answers, and (for labelled data) the index of the correct one.
struct ExampleRecord {
  std::string id;
  std::string context;
  std::string question;
  std::vector<std::string> options;
  std::optional<std::size_t> label;

  bool operator==(const ExampleRecord&) const = default;
};

}  // namespace logiformer
