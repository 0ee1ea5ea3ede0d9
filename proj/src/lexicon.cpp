#include "logiformer/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace logiformer {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Lowercases and collapses internal whitespace to single spaces.
std::string normalize_surface(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kConditionAfter: return "condition-after";
    case Direction::kConditionBefore: return "condition-before";
    case Direction::kNone: return "none";
  }
  return "none";
}

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "condition-after") return Direction::kConditionAfter;
  if (s == "condition-before") return Direction::kConditionBefore;
  if (s == "none" || s.empty()) return Direction::kNone;
  return std::nullopt;
}

std::size_t ConnectiveEntry::word_count() const {
  if (surface.empty()) return 0;
  return static_cast<std::size_t>(std::count(surface.begin(), surface.end(), ' ')) + 1;
}

LexiconParseError::LexiconParseError(std::size_t line, const std::string& what)
    : std::runtime_error("lexicon line " + std::to_string(line) + ": " + what), line_(line) {}

LexiconSet::LexiconSet(std::vector<ConnectiveEntry> connectives,
                       std::unordered_set<std::string> negation_words,
                       std::unordered_set<std::string> stop_words)
    : connectives_(std::move(connectives)),
      negation_words_(std::move(negation_words)),
      stop_words_(std::move(stop_words)) {
  for (auto& c : connectives_) c.surface = normalize_surface(c.surface);
  std::stable_sort(connectives_.begin(), connectives_.end(),
                   [](const auto& a, const auto& b) { return a.surface < b.surface; });
  for (const auto& c : connectives_) max_words_ = std::max(max_words_, c.word_count());
}

const ConnectiveEntry* LexiconSet::find_connective(std::string_view surface) const {
  auto it = std::lower_bound(connectives_.begin(), connectives_.end(), surface,
                             [](const ConnectiveEntry& e, std::string_view s) { return e.surface < s; });
  if (it != connectives_.end() && it->surface == surface) return &*it;
  return nullptr;
}

bool LexiconSet::is_negation(std::string_view lower_token) const {
  return negation_words_.contains(std::string(lower_token));
}

bool LexiconSet::is_stop_word(std::string_view lower_token) const {
  return stop_words_.contains(std::string(lower_token));
}

void LexiconSet::validate() const {
  if (connectives_.empty()) throw LexiconValidationError("lexicon has no connectives");
  if (negation_words_.empty()) throw LexiconValidationError("lexicon has no negation words");
  if (stop_words_.empty()) throw LexiconValidationError("lexicon has no stop words");
  for (std::size_t i = 0; i < connectives_.size(); ++i) {
    if (connectives_[i].surface.empty()) throw LexiconValidationError("empty connective surface");
    if (i > 0 && connectives_[i].surface == connectives_[i - 1].surface)
      throw LexiconValidationError("duplicate connective '" + connectives_[i].surface + "'");
    if (negation_words_.contains(connectives_[i].surface))
      throw LexiconValidationError("'" + connectives_[i].surface +
                                   "' is both a connective and a negation word");
  }
}

LexiconSet parse_lexicon(std::string_view text, const LexiconSet* base) {
  std::map<std::string, Direction> connectives;
  std::unordered_set<std::string> negations;
  std::unordered_set<std::string> stops;
  if (base != nullptr) {
    for (const auto& c : base->connectives()) connectives[c.surface] = c.direction;
    negations = base->negation_words();
    stops = base->stop_words();
  }

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;

    const auto fields = split_tabs(line);
    const std::string role(trim(fields[0]));
    if (fields.size() < 2) throw LexiconParseError(line_no, "expected <role>\\t<surface>");
    const std::string surface = normalize_surface(fields[1]);
    if (surface.empty()) throw LexiconParseError(line_no, "empty surface");

    if (role == "connective") {
      if (fields.size() > 3) throw LexiconParseError(line_no, "too many fields");
      const std::string_view dir_text = fields.size() == 3 ? trim(fields[2]) : std::string_view{};
      const auto dir = parse_direction(dir_text);
      if (!dir) throw LexiconParseError(line_no, "unknown direction '" + std::string(dir_text) + "'");
      connectives[surface] = *dir;
    } else if (role == "negation" || role == "stopword") {
      if (fields.size() > 2 && !trim(fields[2]).empty())
        throw LexiconParseError(line_no, "unexpected direction for role '" + role + "'");
      if (surface.find(' ') != std::string::npos)
        throw LexiconParseError(line_no, role + " entries must be single words");
      (role == "negation" ? negations : stops).insert(surface);
    } else {
      throw LexiconParseError(line_no, "unknown role '" + role + "'");
    }
  }

  std::vector<ConnectiveEntry> entries;
  entries.reserve(connectives.size());
  for (auto& [surface, dir] : connectives) entries.push_back({surface, dir});
  LexiconSet set(std::move(entries), std::move(negations), std::move(stops));
  set.validate();
  return set;
}

LexiconSet load_lexicon(const std::optional<std::filesystem::path>& path, LexiconMode mode) {
  if (!path) return parse_lexicon(default_lexicon_text());
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open lexicon file " + path->string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (mode == LexiconMode::kReplace) return parse_lexicon(buf.str());
  const LexiconSet defaults = parse_lexicon(default_lexicon_text());
  return parse_lexicon(buf.str(), &defaults);
}

std::optional<ConnectiveMatch> classify_token_span(std::span<const std::string> tokens,
                                                   std::size_t position,
                                                   const LexiconSet& lexicon) {
  if (position >= tokens.size()) return std::nullopt;
  const std::size_t max_len = std::min(lexicon.max_connective_words(), tokens.size() - position);
  std::string phrase;
  std::optional<ConnectiveMatch> best;
  for (std::size_t len = 1; len <= max_len; ++len) {
    if (len > 1) phrase.push_back(' ');
    phrase += to_lower(tokens[position + len - 1]);
    if (const auto* entry = lexicon.find_connective(phrase)) best = ConnectiveMatch{entry, len};
  }
  return best;
}

}  // namespace logiformer
