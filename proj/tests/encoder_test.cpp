#include "logiformer/encoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "logiformer/vocabulary.hpp"

namespace logiformer {
namespace {

const LexiconSet& lexicon() {
  static const LexiconSet lex = load_lexicon();
  return lex;
}

Vocabulary vocab_of(std::vector<std::string> texts) { return Vocabulary::build(texts); }

TEST(Vocabulary, ReservesSpecialIds) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(Vocabulary::kCls), "[CLS]");
  EXPECT_EQ(v.id("anything"), Vocabulary::kUnk);
}

TEST(Vocabulary, BuildsInFirstAppearanceOrder) {
  const auto v = vocab_of({"Bob runs. Alice runs", "bob SINGS"});
  EXPECT_EQ(v.regular_tokens(), (std::vector<std::string>{"bob", "runs", ".", "alice", "sings"}));
  EXPECT_EQ(v.id("bob"), Vocabulary::kFirstRegular);
  EXPECT_EQ(v.id("sings"), 8);
}

TEST(Vocabulary, MinCountFiltersRareTokens) {
  std::vector<std::string> texts{"a b a", "c a b"};
  const auto v = Vocabulary::build(texts, 2);
  EXPECT_EQ(v.regular_tokens(), (std::vector<std::string>{"a", "b"}));
}

TEST(Vocabulary, FileRoundTrip) {
  const auto v = vocab_of({"x y z , w"});
  const auto path = std::filesystem::temp_directory_path() / "logiformer_vocab_test.txt";
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path), v);
  std::filesystem::remove(path);
}

TEST(Vocabulary, RejectsDuplicateAndEmptyTokens) {
  const std::vector<std::string> dup{"a", "a"};
  const std::vector<std::string> empty{"a", ""};
  EXPECT_THROW(Vocabulary::from_tokens(dup), VocabularyError);
  EXPECT_THROW(Vocabulary::from_tokens(empty), VocabularyError);
}

TEST(BuildInput, LaysOutSegmentsWithSeparators) {
  const auto v = vocab_of({"if it rains , the ground is wet . is it wet ? yes"});
  const auto seq = build_input("If it rains, the ground is wet.", "Is it wet?", "yes", v, lexicon());
  const std::vector<std::string> expected{"[CLS]", "if",  "it", "rains", ",", "the", "ground", "is",  "wet",
                                          ".",     "[SEP]", "is", "it",    "wet", "?", "[SEP]", "yes", "[SEP]"};
  EXPECT_EQ(seq.tokens, expected);
  EXPECT_EQ(seq.ids.front(), Vocabulary::kCls);
  EXPECT_EQ(seq.spans.cls, (TokenRange{0, 1}));
  EXPECT_EQ(seq.spans.context, (TokenRange{1, 11}));
  EXPECT_EQ(seq.spans.question, (TokenRange{11, 16}));
  EXPECT_EQ(seq.spans.option, (TokenRange{16, 18}));
  EXPECT_EQ(seq.dropped_context_tokens, 0u);
}

TEST(BuildInput, SpansPartitionTheSequence) {
  const auto v = vocab_of({});
  for (const std::string context : {"", "a b c.", "one, two; three. four"}) {
    const auto seq = build_input(context, "q ?", "opt one", v, lexicon());
    EXPECT_EQ(seq.spans.cls.end, seq.spans.context.begin);
    EXPECT_EQ(seq.spans.context.end, seq.spans.question.begin);
    EXPECT_EQ(seq.spans.question.end, seq.spans.option.begin);
    EXPECT_EQ(seq.spans.option.end, seq.size());
    EXPECT_EQ(seq.ids[seq.spans.context.end - 1], Vocabulary::kSep);
    EXPECT_EQ(seq.ids[seq.spans.question.end - 1], Vocabulary::kSep);
    EXPECT_EQ(seq.ids.back(), Vocabulary::kSep);
  }
}

TEST(BuildInput, UnknownTokensMapToUnk) {
  const auto v = vocab_of({"known"});
  const auto seq = build_input("known mystery", "q", "known", v, lexicon());
  EXPECT_EQ(seq.ids[1], v.id("known"));
  EXPECT_EQ(seq.ids[2], Vocabulary::kUnk);
}

TEST(BuildInput, TruncatesContextFromItsEnd) {
  const auto v = vocab_of({});
  const auto seq = build_input("a b c d e f g h", "q", "o", v, lexicon(), 10);
  // 4 specials + 1 question + 1 option leave 4 context tokens.
  EXPECT_EQ(seq.size(), 10u);
  EXPECT_EQ(seq.dropped_context_tokens, 4u);
  EXPECT_EQ(std::vector<std::string>(seq.tokens.begin() + 1, seq.tokens.begin() + 5),
            (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(BuildInput, RejectsEmptyOptionAndOversizedQuestion) {
  const auto v = vocab_of({});
  EXPECT_THROW(build_input("ctx", "q", "   ", v, lexicon()), InputError);
  EXPECT_THROW(build_input("ctx", "q q q q q", "o", v, lexicon(), 8), InputError);
}

TEST(BuildInput, UnitsNeverCrossTheContextOptionSeam) {
  const auto v = vocab_of({});
  // Without the seam, "wet" and "the ground" would form one fragment.
  const auto seq = build_input("if it rains the ground is wet", "q", "the ground is dry", v, lexicon());
  ASSERT_FALSE(seq.units.units.empty());
  const auto& last = seq.units.units.back();
  EXPECT_EQ(last.text, "the ground is dry");
  ASSERT_EQ(seq.unit_alignment.size(), seq.units.units.size());
  EXPECT_EQ(seq.unit_alignment.back(), (TokenRange{seq.spans.option.begin, seq.spans.option.end - 1}));
}

TEST(BuildInput, AlignmentPointsAtTheUnitTokens) {
  const auto v = vocab_of({});
  const auto seq = build_input("Alice sings because Bob runs.", "why ?", "bob runs", v, lexicon());
  ASSERT_EQ(seq.units.units.size(), seq.unit_alignment.size());
  for (std::size_t k = 0; k < seq.units.units.size(); ++k) {
    const auto& words = seq.units.units[k].words;
    const auto& r = seq.unit_alignment[k];
    ASSERT_EQ(r.size(), words.size());
    for (std::size_t i = 0; i < words.size(); ++i) EXPECT_EQ(seq.tokens[r.begin + i], words[i]);
  }
  for (std::size_t k = 0; k < seq.sentence_nodes.size(); ++k) {
    const auto& words = seq.sentence_nodes[k].words;
    const auto& r = seq.node_alignment[k];
    ASSERT_EQ(r.size(), words.size());
    for (std::size_t i = 0; i < words.size(); ++i) EXPECT_EQ(seq.tokens[r.begin + i], words[i]);
  }
}

TEST(Sinusoid, MatchesClosedForm) {
  const std::size_t d = 6;
  const auto table = sinusoid_table(5, d);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle = static_cast<double>(p) / std::pow(10000.0, 2.0 * i / d);
      EXPECT_NEAR(table[p * d + 2 * i], std::sin(angle), 1e-15);
      EXPECT_NEAR(table[p * d + 2 * i + 1], std::cos(angle), 1e-15);
    }
}

TEST(NodeFeatures, RowsAreIntervalMeans) {
  std::vector<double> values(7 * 3);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::sin(static_cast<double>(i) * 1.7);
  const Tensor<double> vt(Shape{7, 3}, values);
  const std::vector<TokenRange> intervals{{1, 4}, {4, 5}, {5, 7}};
  const auto vo = init_node_features(vt, intervals);
  ASSERT_EQ(vo.shape(), (Shape{3, 3}));
  for (std::size_t k = 0; k < intervals.size(); ++k)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t i = intervals[k].begin; i < intervals[k].end; ++i) s += vt(i, c);
      EXPECT_NEAR(vo(k, c), s / static_cast<double>(intervals[k].size()), 1e-12);
    }
  const std::vector<TokenRange> empty{{2, 2}};
  EXPECT_THROW(init_node_features(vt, empty), std::invalid_argument);
}

TEST(NodeFeatures, PositionsAddTheSinusoidTable) {
  const auto vo = Tensor<double>::zeros(4, 6);
  const auto vi = add_node_positions(vo);
  const auto table = sinusoid_table(4, 6);
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_DOUBLE_EQ(vi.values()[i], table[i]);
}

TEST(TokenEncoder, ShapeDeterminismAndLengthLimit) {
  ParameterStore<double> a, b;
  std::mt19937_64 ra(3), rb(3);
  const TokenEncoder<double> ea(a, {8, 2, 2, 16}, 20, ra);
  const TokenEncoder<double> eb(b, {8, 2, 2, 16}, 20, rb);
  const std::vector<std::int32_t> ids{2, 5, 6, 3, 7, 3};
  const auto x = ea.encode(ids);
  EXPECT_EQ(x.shape(), (Shape{6, 8}));
  const auto y = eb.encode(ids);
  EXPECT_TRUE(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
  // Output rows are layer-normalized (gamma 1, beta 0 at initialization).
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < 8; ++c) mean += x(r, c);
    EXPECT_NEAR(mean / 8.0, 0.0, 1e-12);
  }
  const std::vector<std::int32_t> too_long(17, 4);
  EXPECT_THROW(ea.encode(too_long), std::exception);
  EXPECT_THROW((TokenEncoder<double>(a, {6, 4, 1, 16}, 20, ra)), std::invalid_argument);
}

TEST(TokenEncoder, TokenOrderMatters) {
  ParameterStore<double> s;
  std::mt19937_64 rng(1);
  const TokenEncoder<double> e(s, {8, 2, 1, 16}, 10, rng);
  const std::vector<std::int32_t> ab{4, 5}, ba{5, 4};
  const auto x = e.encode(ab);
  const auto y = e.encode(ba);
  double diff = 0.0;
  for (std::size_t c = 0; c < 8; ++c) diff += std::abs(x(0, c) - y(1, c));
  EXPECT_GT(diff, 1e-6);
}

}  // namespace
}  // namespace logiformer
