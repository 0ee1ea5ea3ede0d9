#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "logiformer/lexicon.hpp"

namespace logiformer {

struct Token {
  std::string surface;
  std::string lower;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
  std::size_t index = 0;
};

/// Half-open token interval.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const TokenRange&) const = default;
};

struct LogicalUnit {
  std::size_t id = 0;  // 1-based
  TokenRange tokens;
  std::string text;
  std::vector<std::string> words;  // lowercase token forms, in order
  bool negated = false;
  std::optional<ConnectiveEntry> introducing_connective;
};

struct ConsumedConnective {
  ConnectiveEntry entry;
  std::size_t position = 0;  // index of the first connective token
  std::size_t length = 0;
};

struct SegmentationResult {
  std::vector<LogicalUnit> units;
  std::vector<ConsumedConnective> connectives;
  std::vector<Token> source_tokens;
  std::string source_text;
  /// Token indices where a unit boundary was forced (e.g. context/option seam).
  std::vector<std::size_t> hard_breaks;
};

inline constexpr std::string_view kDefaultPunctuation = ".,;:!?";
/// Tokens that end a sentence for the purpose of pairing causal clauses.
inline constexpr std::string_view kSentenceTerminators = ".!?";

/// Whitespace tokenizer; each character of kDefaultPunctuation becomes its
/// own token.
std::vector<Token> tokenize(std::string_view text);

bool is_punctuation(const Token& token, std::string_view punctuation = kDefaultPunctuation);

/// Splits at punctuation and at every connective (longest match). Connective
/// tokens are consumed: recorded in `connectives`, excluded from unit text.
SegmentationResult split_logical_units(std::string_view text, const LexiconSet& lexicon);

/// Token-level variant. `hard_breaks` lists token indices that always start a
/// new fragment.
SegmentationResult split_logical_units(std::string source_text, std::vector<Token> tokens,
                                       const LexiconSet& lexicon,
                                       std::span<const std::size_t> hard_breaks = {});

/// Splits only at punctuation; connectives stay inside node text.
std::vector<LogicalUnit> split_sentence_nodes(std::string_view text, const LexiconSet& lexicon,
                                              std::string_view punctuation = kDefaultPunctuation);

std::vector<LogicalUnit> split_sentence_nodes(std::string_view source_text,
                                              std::span<const Token> tokens,
                                              const LexiconSet& lexicon,
                                              std::span<const std::size_t> hard_breaks = {},
                                              std::string_view punctuation = kDefaultPunctuation);

}  // namespace logiformer
