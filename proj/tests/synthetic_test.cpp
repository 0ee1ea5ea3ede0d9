#include "logiformer/synthetic.hpp"

#include <gtest/gtest.h>

#include <array>

#include "logiformer/dataset.hpp"
#include "logiformer/logic_graph.hpp"

namespace logiformer {
namespace {

const LexiconSet& lexicon() {
  static const LexiconSet lex = load_lexicon();
  return lex;
}

TEST(Synthetic, DeterministicPerSeed) {
  for (auto mode : {SynthMode::kCausalChain, SynthMode::kCooccurrence, SynthMode::kMixed}) {
    EXPECT_EQ(generate_synthetic(9, 50, mode), generate_synthetic(9, 50, mode));
    EXPECT_NE(generate_synthetic(9, 50, mode), generate_synthetic(10, 50, mode));
  }
}

TEST(Synthetic, SizeAndValidRecords) {
  const auto records = generate_synthetic(1, 100, SynthMode::kMixed);
  ASSERT_EQ(records.size(), 100u);
  for (const auto& r : records) {
    EXPECT_NO_THROW(validate_record(r, true));
    EXPECT_EQ(r.options.size(), 4u);
  }
  EXPECT_THROW(generate_synthetic(1, 0, SynthMode::kMixed), std::invalid_argument);
}

TEST(Synthetic, LabelsAreBalanced) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::array<int, 4> counts{};
    for (const auto& r : generate_synthetic(seed, 100, SynthMode::kMixed)) ++counts[*r.label];
    for (int c : counts) EXPECT_NEAR(c, 25, 10) << "seed " << seed;
  }
}

TEST(Synthetic, RuleBasedOracleRecoversEveryLabel) {
  for (auto mode : {SynthMode::kCausalChain, SynthMode::kCooccurrence, SynthMode::kMixed}) {
    std::size_t agree = 0;
    const auto records = generate_synthetic(21, 500, mode);
    for (const auto& r : records) agree += oracle_answer(r, lexicon()) == r.label;
    EXPECT_EQ(agree, records.size()) << to_string(mode);
  }
}

TEST(Synthetic, CausalContextsParseIntoImplications) {
  for (const auto& r : generate_synthetic(4, 200, SynthMode::kCausalChain)) {
    const auto g = build_logic_graph(split_logical_units(r.context, lexicon()));
    // Three or four stated links, each recovered as a condition -> result pair.
    EXPECT_GE(g.pairs.size(), 3u) << r.context;
    EXPECT_LE(g.pairs.size(), 4u) << r.context;
    EXPECT_TRUE(g.warnings.empty()) << r.context;
  }
}

TEST(Synthetic, MixedModeContainsBothTasks) {
  std::size_t causal = 0;
  const auto records = generate_synthetic(5, 200, SynthMode::kMixed);
  for (const auto& r : records) causal += r.question == kCausalQuestion;
  EXPECT_GT(causal, 60u);
  EXPECT_LT(causal, 140u);
}

TEST(Synthetic, OracleAbstainsOnUnknownQuestions) {
  auto r = generate_synthetic(1, 1, SynthMode::kCausalChain)[0];
  r.question = "something else ?";
  EXPECT_FALSE(oracle_answer(r, lexicon()).has_value());
}

TEST(Synthetic, ModeNames) {
  for (auto m : {SynthMode::kCausalChain, SynthMode::kCooccurrence, SynthMode::kMixed})
    EXPECT_EQ(parse_synth_mode(to_string(m)), m);
  EXPECT_THROW(parse_synth_mode("chain"), std::invalid_argument);
}

}  // namespace
}  // namespace logiformer
