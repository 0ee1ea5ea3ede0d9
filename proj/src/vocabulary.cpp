#include "logiformer/vocabulary.hpp"

#include <fstream>

#include "logiformer/segmenter.hpp"

namespace logiformer {

Vocabulary::Vocabulary() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) {
    ids_.emplace(s, static_cast<std::int32_t>(tokens_.size()));
    tokens_.emplace_back(s);
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_count) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (const auto& t : tokenize(text)) {
      if (counts[t.lower]++ == 0) order.push_back(t.lower);
    }
  }
  Vocabulary vocab;
  for (const auto& t : order)
    if (counts[t] >= min_count) vocab.add(t);
  return vocab;
}

std::int32_t Vocabulary::add(std::string_view token) {
  if (token.empty()) throw VocabularyError("empty token");
  const auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::int32_t Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw VocabularyError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {tokens_.begin() + kFirstRegular, tokens_.end()};
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw VocabularyError("cannot write " + path.string());
  for (const auto& t : regular_tokens()) out << t << '\n';
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> regular) {
  Vocabulary vocab;
  for (std::size_t i = 0; i < regular.size(); ++i) {
    if (regular[i].empty()) throw VocabularyError("empty token at line " + std::to_string(i + 1));
    if (vocab.contains(regular[i]))
      throw VocabularyError("duplicate token '" + regular[i] + "' at line " + std::to_string(i + 1));
    vocab.add(regular[i]);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabularyError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return from_tokens(lines);
}

}  // namespace logiformer
