#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "logiformer/syntax_graph.hpp"
#include "support/syntax_oracle.hpp"

namespace logiformer {
namespace {

const LexiconSet& lexicon() {
  static const LexiconSet lex = load_lexicon();
  return lex;
}

LogicalUnit node_of(const std::string& text) {
  auto nodes = split_sentence_nodes(text, lexicon());
  EXPECT_EQ(nodes.size(), 1u) << text;
  return nodes.front();
}

TEST(TokenSet, StopWordsRemovedAndDeduplicated) {
  EXPECT_EQ(token_set(node_of("Bill goes golfing in the morning"), lexicon().stop_words()),
            (TokenSet{"bill", "goes", "golfing", "morning"}));
  EXPECT_TRUE(token_set(node_of("the of and to"), lexicon().stop_words()).empty());
  EXPECT_EQ(token_set(node_of("go go go"), lexicon().stop_words()), (TokenSet{"go"}));
}

TEST(OverlapRatio, Examples) {
  EXPECT_DOUBLE_EQ(overlap_ratio({"bill", "goes", "golfing", "morning"}, {"bill", "go", "golfing"}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(overlap_ratio({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_DOUBLE_EQ(overlap_ratio({"a", "b"}, {"c"}), 0.0);
  EXPECT_THROW(overlap_ratio({}, {"a"}), std::invalid_argument);
}

TEST(SyntaxGraph, BillExample) {
  auto nodes = split_sentence_nodes("Bill goes golfing in the morning. Bill will not go golfing.", lexicon());
  ASSERT_EQ(nodes.size(), 2u);
  const auto g = build_syntax_graph(nodes, lexicon().stop_words(), 0.5);
  EXPECT_EQ(g.adjacency.at(0, 1), 1);
  EXPECT_EQ(g.adjacency.at(1, 0), 1);
  EXPECT_EQ(build_syntax_graph(nodes, lexicon().stop_words(), 1.0).adjacency, AdjacencyMatrix(2));
}

TEST(SyntaxGraph, StopWordOnlyNodeHasNoEdges) {
  auto nodes = split_sentence_nodes("the of the. the of the. cats purr.", lexicon());
  const auto g = build_syntax_graph(nodes, lexicon().stop_words(), 0.0);
  EXPECT_EQ(g.adjacency, AdjacencyMatrix(3));
}

TEST(SyntaxGraph, RejectsDeltaOutsideUnitInterval) {
  EXPECT_THROW(build_syntax_graph({}, lexicon().stop_words(), -0.1), std::invalid_argument);
  EXPECT_THROW(build_syntax_graph({}, lexicon().stop_words(), 1.5), std::invalid_argument);
}

using reference::random_nodes;

TEST(SyntaxGraph, MatchesBruteForceOracle) {
  std::mt19937 rng(500);
  for (int trial = 0; trial < 500; ++trial) {
    const auto nodes = random_nodes(rng, 3 + rng() % 10, 30);
    for (double delta : {0.0, 0.3, 0.5, 0.7, 1.0}) {
      const auto g = build_syntax_graph(nodes, lexicon().stop_words(), delta);
      ASSERT_EQ(g.adjacency, reference::brute_force_syntax(nodes, lexicon().stop_words(), delta));
    }
  }
}

TEST(SyntaxGraph, SymmetricZeroDiagonalAndMonotoneInDelta) {
  std::mt19937 rng(501);
  for (int trial = 0; trial < 300; ++trial) {
    const auto nodes = random_nodes(rng, 2 + rng() % 10, 12);
    const auto lo = build_syntax_graph(nodes, lexicon().stop_words(), 0.3);
    const auto hi = build_syntax_graph(nodes, lexicon().stop_words(), 0.7);
    ASSERT_TRUE(lo.adjacency.symmetric());
    for (std::size_t i = 0; i < nodes.size(); ++i) ASSERT_EQ(lo.adjacency.at(i, i), 0);
    for (std::size_t i = 0; i < lo.adjacency.data().size(); ++i)
      ASSERT_LE(hi.adjacency.data()[i], lo.adjacency.data()[i]);
  }
}

TEST(SyntaxGraph, PermutationPermutesMatrix) {
  std::mt19937 rng(502);
  for (int trial = 0; trial < 200; ++trial) {
    const auto nodes = random_nodes(rng, 2 + rng() % 8, 10);
    std::vector<std::size_t> perm(nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LogicalUnit> shuffled;
    for (std::size_t p : perm) shuffled.push_back(nodes[p]);
    const auto g = build_syntax_graph(nodes, lexicon().stop_words(), 0.5);
    const auto h = build_syntax_graph(shuffled, lexicon().stop_words(), 0.5);
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = 0; j < perm.size(); ++j) ASSERT_EQ(h.adjacency.at(i, j), g.adjacency.at(perm[i], perm[j]));
  }
}

TEST(SyntaxGraph, Exports) {
  auto nodes = split_sentence_nodes("Bill goes golfing. Bill will go golfing. cats purr.", lexicon());
  const auto g = build_syntax_graph(nodes, lexicon().stop_words(), 0.5);
  const auto j = to_json(g);
  EXPECT_EQ(j["edges"], nlohmann::json::array({nlohmann::json::array({1, 2})}));
  EXPECT_EQ(j["adjacency"]["1"], nlohmann::json::array({2}));
  EXPECT_EQ(j["adjacency"]["3"], nlohmann::json::array());
  EXPECT_NE(to_dot(g).find("S1 -- S2"), std::string::npos);
}

}  // namespace
}  // namespace logiformer
