#pragma once

#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/adjacency.hpp"
#include "logiformer/segmenter.hpp"

namespace logiformer {

inline constexpr double kDefaultDelta = 0.5;

/// Co-occurrence graph over sentence nodes. Symmetric, zero diagonal.
struct SyntaxGraph {
  std::vector<LogicalUnit> nodes;
  AdjacencyMatrix adjacency;
  double delta = kDefaultDelta;

  std::size_t size() const { return nodes.size(); }
};

using TokenSet = std::set<std::string>;

/// Lowercase word set of a node with stop words and punctuation removed.
TokenSet token_set(const LogicalUnit& unit, const std::unordered_set<std::string>& stop_words);

/// |a ∩ b| / min(|a|, |b|). Throws std::invalid_argument if either set is
/// empty; callers skip empty sets before asking.
double overlap_ratio(const TokenSet& a, const TokenSet& b);

/// Co-occurrence extraction: nodes k < j get a symmetric edge when both
/// token sets are non-empty and their overlap ratio is strictly above
/// `delta`. Throws std::invalid_argument for delta outside [0, 1].
SyntaxGraph build_syntax_graph(std::vector<LogicalUnit> nodes,
                               const std::unordered_set<std::string>& stop_words,
                               double delta = kDefaultDelta);

nlohmann::json to_json(const SyntaxGraph& graph);
std::string to_dot(const SyntaxGraph& graph);

}  // namespace logiformer
