#pragma once

// Token-to-id mapping over lowercased whitespace/punctuation tokens.
//
// Ids 0..3 are reserved for [PAD], [UNK], [CLS], [SEP]. The vocabulary file
// is UTF-8 with one token per line; line i (0-based) holds id i + 4.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace logiformer {

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::int32_t kFirstRegular = 4;

  /// Specials only.
  Vocabulary();

  /// Every distinct lowercased token of `texts` seen at least `min_count`
  /// times, in order of first appearance.
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1);

  /// Adds `token` (already lowercased) if missing; returns its id.
  std::int32_t add(std::string_view token);
  /// Id of a lowercased token, kUnk when absent.
  std::int32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }

  /// Regular tokens in id order (the file body).
  std::vector<std::string> regular_tokens() const;
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary from_tokens(std::span<const std::string> regular);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

}  // namespace logiformer
