#include "logiformer/segmenter.hpp"

#include <algorithm>
#include <cctype>

namespace logiformer {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_negation_token(const std::string& lower, const LexiconSet& lexicon) {
  return lexicon.is_negation(lower) || lower.ends_with("n't");
}

bool is_hard_break(std::span<const std::size_t> breaks, std::size_t i) {
  return std::find(breaks.begin(), breaks.end(), i) != breaks.end();
}

LogicalUnit make_unit(std::string_view source, std::span<const Token> tokens, TokenRange range,
                      const LexiconSet& lexicon) {
  LogicalUnit unit;
  unit.tokens = range;
  const Token& first = tokens[range.begin];
  const Token& last = tokens[range.end - 1];
  unit.text = std::string(source.substr(first.begin, last.end - first.begin));
  for (std::size_t i = range.begin; i < range.end; ++i) {
    unit.words.push_back(tokens[i].lower);
    if (is_negation_token(tokens[i].lower, lexicon)) unit.negated = true;
  }
  return unit;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  auto emit = [&](std::size_t b, std::size_t e) {
    Token t;
    t.surface = std::string(text.substr(b, e - b));
    t.lower = to_lower(t.surface);
    t.begin = b;
    t.end = e;
    t.index = tokens.size();
    tokens.push_back(std::move(t));
  };

  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (kDefaultPunctuation.find(text[i]) != std::string_view::npos) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) &&
           kDefaultPunctuation.find(text[j]) == std::string_view::npos) {
      ++j;
    }
    emit(i, j);
    i = j;
  }
  return tokens;
}

bool is_punctuation(const Token& token, std::string_view punctuation) {
  return token.surface.size() == 1 && punctuation.find(token.surface[0]) != std::string_view::npos;
}

SegmentationResult split_logical_units(std::string_view text, const LexiconSet& lexicon) {
  auto tokens = tokenize(text);
  return split_logical_units(std::string(text), std::move(tokens), lexicon);
}

SegmentationResult split_logical_units(std::string source_text, std::vector<Token> tokens,
                                       const LexiconSet& lexicon,
                                       std::span<const std::size_t> hard_breaks) {
  SegmentationResult result;
  result.source_text = std::move(source_text);
  result.source_tokens = std::move(tokens);
  result.hard_breaks.assign(hard_breaks.begin(), hard_breaks.end());
  const auto& toks = result.source_tokens;

  std::vector<std::string> lowers;
  lowers.reserve(toks.size());
  for (const auto& t : toks) lowers.push_back(t.lower);

  std::optional<ConnectiveEntry> pending_connective;
  std::size_t fragment_begin = 0;
  bool in_fragment = false;

  auto close_fragment = [&](std::size_t end) {
    if (!in_fragment) return;
    LogicalUnit unit = make_unit(result.source_text, toks, {fragment_begin, end}, lexicon);
    unit.id = result.units.size() + 1;
    unit.introducing_connective = pending_connective;
    pending_connective.reset();
    result.units.push_back(std::move(unit));
    in_fragment = false;
  };

  std::size_t i = 0;
  while (i < toks.size()) {
    if (is_hard_break(hard_breaks, i)) {
      close_fragment(i);
      pending_connective.reset();
    }
    if (is_punctuation(toks[i])) {
      close_fragment(i);
      ++i;
      continue;
    }
    if (const auto match = classify_token_span(lowers, i, lexicon)) {
      // A multiword connective may not straddle a hard break.
      bool crosses = false;
      for (std::size_t k = i + 1; k < i + match->length; ++k) crosses |= is_hard_break(hard_breaks, k);
      if (!crosses) {
        close_fragment(i);
        result.connectives.push_back({*match->entry, i, match->length});
        pending_connective = *match->entry;
        i += match->length;
        continue;
      }
    }
    if (!in_fragment) {
      fragment_begin = i;
      in_fragment = true;
    }
    ++i;
  }
  close_fragment(toks.size());
  return result;
}

std::vector<LogicalUnit> split_sentence_nodes(std::string_view text, const LexiconSet& lexicon,
                                              std::string_view punctuation) {
  const auto tokens = tokenize(text);
  return split_sentence_nodes(text, tokens, lexicon, {}, punctuation);
}

std::vector<LogicalUnit> split_sentence_nodes(std::string_view source_text,
                                              std::span<const Token> tokens,
                                              const LexiconSet& lexicon,
                                              std::span<const std::size_t> hard_breaks,
                                              std::string_view punctuation) {
  std::vector<LogicalUnit> nodes;
  std::size_t begin = 0;
  bool open = false;
  std::vector<std::string> lowers;
  lowers.reserve(tokens.size());
  for (const auto& t : tokens) lowers.push_back(t.lower);

  // Fragments made only of connectives carry no content of their own.
  auto only_connectives = [&](std::size_t b, std::size_t e) {
    const std::span<const std::string> fragment(lowers.data() + b, e - b);
    std::size_t i = 0;
    while (i < fragment.size()) {
      const auto m = classify_token_span(fragment, i, lexicon);
      if (!m) return false;
      i += m->length;
    }
    return true;
  };

  auto close = [&](std::size_t end) {
    if (!open) return;
    open = false;
    if (only_connectives(begin, end)) return;
    LogicalUnit node = make_unit(source_text, tokens, {begin, end}, lexicon);
    node.id = nodes.size() + 1;
    nodes.push_back(std::move(node));
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_hard_break(hard_breaks, i)) close(i);
    if (is_punctuation(tokens[i], punctuation)) {
      close(i);
      continue;
    }
    if (!open) {
      begin = i;
      open = true;
    }
  }
  close(tokens.size());
  return nodes;
}

}  // namespace logiformer
