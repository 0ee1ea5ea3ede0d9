#include "logiformer/syntax_graph.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace logiformer {

TokenSet token_set(const LogicalUnit& unit, const std::unordered_set<std::string>& stop_words) {
  TokenSet set;
  for (const auto& w : unit.words) {
    if (w.size() == 1 && kDefaultPunctuation.find(w[0]) != std::string_view::npos) continue;
    if (stop_words.contains(w)) continue;
    set.insert(w);
  }
  return set;
}

double overlap_ratio(const TokenSet& a, const TokenSet& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("overlap_ratio: empty token set");
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

SyntaxGraph build_syntax_graph(std::vector<LogicalUnit> nodes,
                               const std::unordered_set<std::string>& stop_words, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
  SyntaxGraph g;
  g.delta = delta;
  g.nodes = std::move(nodes);
  g.adjacency = AdjacencyMatrix(g.nodes.size());

  std::vector<TokenSet> sets;
  sets.reserve(g.nodes.size());
  for (const auto& n : g.nodes) sets.push_back(token_set(n, stop_words));

  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (sets[k].empty()) continue;
    for (std::size_t j = k + 1; j < sets.size(); ++j) {
      if (sets[j].empty()) continue;
      if (overlap_ratio(sets[k], sets[j]) > delta) {
        g.adjacency.at(k, j) = 1;
        g.adjacency.at(j, k) = 1;
      }
    }
  }
  return g;
}

nlohmann::json to_json(const SyntaxGraph& graph) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : graph.nodes) nodes.push_back({{"id", n.id}, {"text", n.text}});
  json adjacency = json::object();
  json edges = json::array();
  for (std::size_t k = 0; k < graph.size(); ++k) {
    json neighbours = json::array();
    for (std::size_t j = 0; j < graph.size(); ++j) {
      if (graph.adjacency.at(k, j) == 0) continue;
      neighbours.push_back(j + 1);
      if (j > k) edges.push_back({k + 1, j + 1});
    }
    adjacency[std::to_string(k + 1)] = neighbours;
  }
  return {{"nodes", nodes},
          {"delta", graph.delta},
          {"adjacency", adjacency},
          {"edges", edges},
          {"matrix", graph.adjacency.rows()}};
}

std::string to_dot(const SyntaxGraph& graph) {
  std::ostringstream os;
  os << "graph syntax {\n  node [shape=box];\n";
  for (const auto& n : graph.nodes)
    os << "  S" << n.id << " [label=\"S" << n.id << ": " << dot_escape(n.text) << "\"];\n";
  for (std::size_t k = 0; k < graph.size(); ++k)
    for (std::size_t j = k + 1; j < graph.size(); ++j)
      if (graph.adjacency.at(k, j) != 0) os << "  S" << k + 1 << " -- S" << j + 1 << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace logiformer
