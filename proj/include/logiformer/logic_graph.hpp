#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/adjacency.hpp"
#include "logiformer/segmenter.hpp"

namespace logiformer {

struct CausalPair {
  std::size_t condition_id = 0;  // 1-based unit ids
  std::size_t result_id = 0;
  ConnectiveEntry connective;
};

/// Directed logical graph. adjacency(p-1, q-1) = 1 for each pair p -> q and
/// adjacency(k-1, k-1) = -1 for each negated unit k.
struct LogicGraph {
  std::vector<LogicalUnit> nodes;
  std::vector<CausalPair> pairs;
  AdjacencyMatrix adjacency;
  std::vector<std::string> warnings;

  std::size_t size() const { return nodes.size(); }
};

struct Literal {
  std::size_t unit_id = 0;
  bool negated = false;
  bool operator==(const Literal&) const = default;
};

struct Implication {
  Literal condition;
  Literal result;
  bool operator==(const Implication&) const = default;
};

using Conjunct = std::variant<Implication, Literal>;

struct LogicalExpression {
  std::vector<Conjunct> conjuncts;
  bool operator==(const LogicalExpression&) const = default;
};

class ExpressionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orients every causal connective of `seg` into a condition -> result pair
/// and marks negated units on the diagonal.
///
/// A condition-before connective ("therefore") links the unit before it to
/// the unit after it. A condition-after connective ("if", "unless") takes the
/// unit after it as the condition; the result is the unit before it when that
/// unit is in the same sentence, otherwise (sentence-initial "If A, B") the
/// unit following the condition. Connectives lacking a required unit are
/// skipped with a warning. Duplicate pairs are recorded once.
LogicGraph build_logic_graph(const SegmentationResult& seg);

LogicalExpression derive_logical_expression(const LogicGraph& graph);

/// UTF-8 rendering, e.g. "(U2→U1) ∧ (U4→¬U3) ∧ ¬U5".
std::string render(const LogicalExpression& expr);
LogicalExpression parse_expression(std::string_view text);

nlohmann::json to_json(const LogicGraph& graph);
std::string to_dot(const LogicGraph& graph);

}  // namespace logiformer
