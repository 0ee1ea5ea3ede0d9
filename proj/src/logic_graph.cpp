#include "logiformer/logic_graph.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>

namespace logiformer {

bool AdjacencyMatrix::symmetric() const {
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = r + 1; c < n_; ++c)
      if (at(r, c) != at(c, r)) return false;
  return true;
}

std::vector<std::vector<int>> AdjacencyMatrix::rows() const {
  std::vector<std::vector<int>> out(n_);
  for (std::size_t r = 0; r < n_; ++r) out[r].assign(data_.begin() + r * n_, data_.begin() + (r + 1) * n_);
  return out;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

namespace {

// True when a sentence terminator or a hard break separates token index
// `from` (inclusive) and `to` (exclusive).
bool separated(const SegmentationResult& seg, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    const Token& t = seg.source_tokens[i];
    if (is_punctuation(t, kSentenceTerminators)) return true;
  }
  for (std::size_t h : seg.hard_breaks)
    if (h >= from && h <= to && h > 0) return true;
  return false;
}

std::optional<std::size_t> unit_before(const std::vector<LogicalUnit>& units, std::size_t pos) {
  std::optional<std::size_t> found;
  for (std::size_t u = 0; u < units.size(); ++u)
    if (units[u].tokens.end <= pos) found = u;
  return found;
}

std::optional<std::size_t> unit_after(const std::vector<LogicalUnit>& units, std::size_t pos) {
  for (std::size_t u = 0; u < units.size(); ++u)
    if (units[u].tokens.begin >= pos) return u;
  return std::nullopt;
}

}  // namespace

LogicGraph build_logic_graph(const SegmentationResult& seg) {
  LogicGraph g;
  g.nodes = seg.units;
  const auto& units = g.nodes;
  g.adjacency = AdjacencyMatrix(units.size());

  auto add_pair = [&](std::size_t cond, std::size_t res, const ConnectiveEntry& c) {
    for (const auto& p : g.pairs)
      if (p.condition_id == cond + 1 && p.result_id == res + 1) return;
    g.pairs.push_back({cond + 1, res + 1, c});
    g.adjacency.at(cond, res) = 1;
  };

  for (const auto& consumed : seg.connectives) {
    const auto& c = consumed.entry;
    if (!c.is_causal()) continue;
    const std::size_t pos = consumed.position;
    const auto before = unit_before(units, pos);
    const auto after = unit_after(units, pos + consumed.length);
    const std::string where = "'" + c.surface + "' at token " + std::to_string(pos);

    if (!after) {
      g.warnings.push_back(where + ": no unit after the connective");
      continue;
    }
    if (c.direction == Direction::kConditionBefore) {
      if (!before) {
        g.warnings.push_back(where + ": no unit before the connective");
        continue;
      }
      add_pair(*before, *after, c);
      continue;
    }

    // condition-after
    const bool leading = !before || separated(seg, units[*before].tokens.end, pos);
    if (!leading) {
      add_pair(*after, *before, c);
      continue;
    }
    const std::size_t result = *after + 1;
    if (result >= units.size() ||
        separated(seg, units[*after].tokens.end, units[result].tokens.begin)) {
      g.warnings.push_back(where + ": sentence-initial connective without a result clause");
      continue;
    }
    add_pair(*after, result, c);
  }

  for (std::size_t k = 0; k < units.size(); ++k)
    if (units[k].negated) g.adjacency.at(k, k) = -1;
  return g;
}

LogicalExpression derive_logical_expression(const LogicGraph& graph) {
  auto literal = [&](std::size_t id) {
    return Literal{id, graph.adjacency.at(id - 1, id - 1) == -1};
  };

  struct Keyed {
    std::size_t key;
    Conjunct term;
  };
  std::vector<Keyed> terms;
  std::vector<bool> covered(graph.size() + 1, false);
  for (const auto& p : graph.pairs) {
    terms.push_back({std::min(p.condition_id, p.result_id),
                     Implication{literal(p.condition_id), literal(p.result_id)}});
    covered[p.condition_id] = covered[p.result_id] = true;
  }
  for (std::size_t id = 1; id <= graph.size(); ++id)
    if (!covered[id]) terms.push_back({id, literal(id)});
  std::stable_sort(terms.begin(), terms.end(), [](const Keyed& a, const Keyed& b) { return a.key < b.key; });

  LogicalExpression expr;
  for (auto& t : terms) expr.conjuncts.push_back(std::move(t.term));
  return expr;
}

namespace {

constexpr std::string_view kNot = "\xC2\xAC";         // ¬
constexpr std::string_view kImplies = "\xE2\x86\x92";  // →
constexpr std::string_view kAnd = "\xE2\x88\xA7";      // ∧

void render_literal(std::ostringstream& os, const Literal& l) {
  if (l.negated) os << kNot;
  os << 'U' << l.unit_id;
}

}  // namespace

std::string render(const LogicalExpression& expr) {
  std::ostringstream os;
  for (std::size_t i = 0; i < expr.conjuncts.size(); ++i) {
    if (i > 0) os << ' ' << kAnd << ' ';
    if (const auto* imp = std::get_if<Implication>(&expr.conjuncts[i])) {
      os << '(';
      render_literal(os, imp->condition);
      os << kImplies;
      render_literal(os, imp->result);
      os << ')';
    } else {
      render_literal(os, std::get<Literal>(expr.conjuncts[i]));
    }
  }
  return os.str();
}

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  LogicalExpression parse() {
    LogicalExpression expr;
    skip_space();
    if (at_end()) return expr;
    expr.conjuncts.push_back(term());
    while (true) {
      skip_space();
      if (at_end()) break;
      expect(kAnd);
      expr.conjuncts.push_back(term());
    }
    return expr;
  }

 private:
  Conjunct term() {
    skip_space();
    if (consume("(")) {
      Implication imp;
      imp.condition = literal();
      skip_space();
      expect(kImplies);
      imp.result = literal();
      skip_space();
      expect(")");
      return imp;
    }
    return literal();
  }

  Literal literal() {
    skip_space();
    Literal l;
    l.negated = consume(kNot);
    skip_space();
    expect("U");
    const std::size_t start = pos_;
    while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (start == pos_) fail("expected unit number");
    l.unit_id = std::stoul(std::string(text_.substr(start, pos_ - start)));
    return l;
  }

  bool consume(std::string_view s) {
    if (text_.substr(pos_).starts_with(s)) {
      pos_ += s.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view s) {
    if (!consume(s)) fail("expected '" + std::string(s) + "'");
  }
  void skip_space() {
    while (!at_end() && text_[pos_] == ' ') ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionParseError("expression offset " + std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

LogicalExpression parse_expression(std::string_view text) { return ExpressionParser(text).parse(); }

nlohmann::json to_json(const LogicGraph& graph) {
  using nlohmann::json;
  std::vector<bool> is_condition(graph.size() + 1, false);
  for (const auto& p : graph.pairs) is_condition[p.condition_id] = true;

  json nodes = json::array();
  for (const auto& u : graph.nodes) {
    nodes.push_back({{"id", u.id},
                     {"text", u.text},
                     {"negated", u.negated},
                     {"role", is_condition[u.id] ? "condition" : "result"}});
  }
  json edges = json::array();
  for (const auto& p : graph.pairs)
    edges.push_back({{"from", p.condition_id}, {"to", p.result_id}, {"connective", p.connective.surface}});
  json diag = json::array();
  for (std::size_t k = 0; k < graph.size(); ++k) diag.push_back(graph.adjacency.at(k, k));
  return {{"nodes", nodes},
          {"edges", edges},
          {"diag", diag},
          {"matrix", graph.adjacency.rows()},
          {"warnings", graph.warnings}};
}

std::string to_dot(const LogicGraph& graph) {
  std::vector<bool> is_condition(graph.size() + 1, false);
  for (const auto& p : graph.pairs) is_condition[p.condition_id] = true;

  std::ostringstream os;
  os << "digraph logic {\n  rankdir=LR;\n  node [shape=box, style=filled];\n";
  for (const auto& u : graph.nodes) {
    os << "  U" << u.id << " [label=\"U" << u.id << ": " << dot_escape(u.text) << "\", fillcolor=\""
       << (is_condition[u.id] ? "orange" : "lightblue") << "\"";
    if (u.negated) os << ", negated=true, xlabel=\"" << kNot << "\", peripheries=2";
    os << "];\n";
  }
  for (const auto& p : graph.pairs)
    os << "  U" << p.condition_id << " -> U" << p.result_id << " [label=\""
       << dot_escape(p.connective.surface) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace logiformer
