#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace logiformer {

/// Which side of a causal connective carries the condition.
enum class Direction {
  kConditionAfter,   // "B if A": the clause after the connective is the condition
  kConditionBefore,  // "A, therefore B": the clause before is the condition
  kNone,             // splits units, no causal pair ("however", "then")
};

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

struct ConnectiveEntry {
  std::string surface;  // lowercase, single spaces between words
  Direction direction = Direction::kNone;

  bool is_causal() const { return direction != Direction::kNone; }
  std::size_t word_count() const;

  bool operator==(const ConnectiveEntry&) const = default;
};

/// Raised for a malformed lexicon file; `line()` is 1-based.
class LexiconParseError : public std::runtime_error {
 public:
  LexiconParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a loaded lexicon violates a collection-level invariant.
class LexiconValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Connectives, negation words and stop words. Immutable after loading.
class LexiconSet {
 public:
  LexiconSet() = default;
  LexiconSet(std::vector<ConnectiveEntry> connectives,
             std::unordered_set<std::string> negation_words,
             std::unordered_set<std::string> stop_words);

  const std::vector<ConnectiveEntry>& connectives() const { return connectives_; }
  const std::unordered_set<std::string>& negation_words() const { return negation_words_; }
  const std::unordered_set<std::string>& stop_words() const { return stop_words_; }

  const ConnectiveEntry* find_connective(std::string_view surface) const;
  bool is_negation(std::string_view lower_token) const;
  bool is_stop_word(std::string_view lower_token) const;

  /// Longest connective surface, in words.
  std::size_t max_connective_words() const { return max_words_; }

  /// Throws LexiconValidationError on empty collections, duplicate
  /// connectives or words that are both connective and negation.
  void validate() const;

 private:
  std::vector<ConnectiveEntry> connectives_;  // sorted by surface
  std::unordered_set<std::string> negation_words_;
  std::unordered_set<std::string> stop_words_;
  std::size_t max_words_ = 0;
};

/// Contents of the shipped default lexicon file.
std::string_view default_lexicon_text();

/// Parses lexicon text. Entries from `text` override those already in
/// `base` (a connective's direction is replaced, words are added).
LexiconSet parse_lexicon(std::string_view text, const LexiconSet* base = nullptr);

enum class LexiconMode {
  kMerge,    // file entries are layered over the defaults
  kReplace,  // the file alone defines the lexicon
};

/// Defaults when `path` is empty, otherwise the file combined with the
/// defaults according to `mode`.
LexiconSet load_lexicon(const std::optional<std::filesystem::path>& path = std::nullopt,
                        LexiconMode mode = LexiconMode::kMerge);

struct ConnectiveMatch {
  const ConnectiveEntry* entry = nullptr;
  std::size_t length = 0;  // tokens consumed
};

/// Longest connective starting at `position`. Tokens are compared
/// case-insensitively.
std::optional<ConnectiveMatch> classify_token_span(std::span<const std::string> tokens,
                                                   std::size_t position,
                                                   const LexiconSet& lexicon);

std::string to_lower(std::string_view s);

}  // namespace logiformer
