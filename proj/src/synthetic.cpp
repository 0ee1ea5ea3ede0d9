#include "logiformer/synthetic.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "logiformer/logic_graph.hpp"
#include "logiformer/syntax_graph.hpp"

namespace logiformer {

namespace {

const std::vector<std::string> kEntities{"alice", "bob",   "carol", "dave",  "erin",  "frank",
                                         "grace", "heidi", "ivan",  "judy",  "karl",  "lena"};
const std::vector<std::string> kPredicates{"sings",  "runs",   "sleeps", "dances", "cooks", "reads",
                                           "swims",  "laughs", "paints", "writes", "jumps", "smiles"};

// Portable draws: the standard distributions are implementation-defined.
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename V>
void shuffle(V& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

// k distinct indices from [0, n).
std::vector<std::size_t> sample(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  shuffle(all, rng);
  all.resize(k);
  return all;
}

// Atoms with distinct entities and distinct predicates.
std::vector<std::string> atoms(std::mt19937_64& rng, std::size_t k) {
  const auto e = sample(rng, kEntities.size(), k);
  const auto p = sample(rng, kPredicates.size(), k);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(kEntities[e[i]] + " " + kPredicates[p[i]]);
  return out;
}

// One sentence stating cond -> result.
std::string link_sentence(const std::string& c, const std::string& r, std::size_t form) {
  switch (form) {
    case 0:
      return "if " + c + ", " + r + ".";
    case 1:
      return r + " if " + c + ".";
    case 2:
      return r + " because " + c + ".";
    case 3:
      return c + ", so " + r + ".";
    case 4:
      return c + ". therefore, " + r + ".";
    case 5:
      return "when " + c + ", " + r + ".";
    case 6:
      return r + " since " + c + ".";
    default:
      return c + ", thus " + r + ".";
  }
}
constexpr std::size_t kLinkForms = 8;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

// Places `correct` at `label` among the distractors.
std::vector<std::string> arrange(std::string correct, std::vector<std::string> distractors, std::size_t label) {
  distractors.insert(distractors.begin() + static_cast<std::ptrdiff_t>(label), std::move(correct));
  return distractors;
}

ExampleRecord causal_record(std::mt19937_64& rng, std::size_t label) {
  // Three chains; the first has one or two links, the others one each.
  const std::size_t first = 1 + pick(rng, 2);
  const auto a = atoms(rng, first + 5);
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < first; ++i) links.emplace_back(i, i + 1);
  links.emplace_back(first + 1, first + 2);
  links.emplace_back(first + 3, first + 4);
  const std::vector<std::size_t> roots{0, first + 1, first + 3};

  std::vector<std::string> sentences;
  for (const auto& [u, v] : links) sentences.push_back(link_sentence(a[u], a[v], pick(rng, kLinkForms)));
  shuffle(sentences, rng);

  std::vector<std::string> distractors;
  for (std::size_t root : roots) distractors.push_back(a[root]);
  shuffle(distractors, rng);

  ExampleRecord r;
  r.context = join(sentences);
  r.question = kCausalQuestion;
  r.options = arrange(a[links[pick(rng, links.size())].second], std::move(distractors), label);
  r.label = label;
  return r;
}

ExampleRecord cooccurrence_record(std::mt19937_64& rng, std::size_t label) {
  const std::size_t facts = 4;
  const auto e = sample(rng, kEntities.size(), facts);
  const auto p = sample(rng, kPredicates.size(), facts);
  std::vector<std::string> sentences;
  for (std::size_t i = 0; i < facts; ++i) sentences.push_back(kEntities[e[i]] + " " + kPredicates[p[i]] + ".");

  const std::size_t stated = pick(rng, facts);
  std::vector<std::pair<std::size_t, std::size_t>> mixes;
  for (std::size_t i = 0; i < facts; ++i)
    for (std::size_t j = 0; j < facts; ++j)
      if (i != j) mixes.emplace_back(i, j);
  std::vector<std::string> distractors;
  for (std::size_t k : sample(rng, mixes.size(), 3))
    distractors.push_back(kEntities[e[mixes[k].first]] + " " + kPredicates[p[mixes[k].second]]);

  ExampleRecord r;
  r.context = join(sentences);
  r.question = kCooccurrenceQuestion;
  r.options = arrange(kEntities[e[stated]] + " " + kPredicates[p[stated]], std::move(distractors), label);
  r.label = label;
  return r;
}

std::string atom_of(const LogicalUnit& u) { return join(u.words); }

std::optional<std::size_t> unique_match(const std::vector<bool>& ok) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    if (!ok[i]) continue;
    if (found) return std::nullopt;
    found = i;
  }
  return found;
}

std::optional<std::size_t> causal_oracle(const ExampleRecord& record, const LexiconSet& lexicon) {
  const auto g = build_logic_graph(split_logical_units(record.context, lexicon));
  std::set<std::string> derived;
  for (const auto& p : g.pairs) derived.insert(atom_of(g.nodes[p.result_id - 1]));
  std::vector<bool> ok;
  for (const auto& option : record.options) {
    const auto units = split_logical_units(option, lexicon);
    ok.push_back(units.units.size() == 1 && derived.count(atom_of(units.units[0])) != 0);
  }
  return unique_match(ok);
}

std::optional<std::size_t> cooccurrence_oracle(const ExampleRecord& record, const LexiconSet& lexicon) {
  std::vector<TokenSet> context_sets;
  for (const auto& node : split_sentence_nodes(record.context, lexicon))
    context_sets.push_back(token_set(node, lexicon.stop_words()));
  std::vector<bool> ok;
  for (const auto& option : record.options) {
    const auto nodes = split_sentence_nodes(option, lexicon);
    bool hit = false;
    if (nodes.size() == 1) {
      const auto s = token_set(nodes[0], lexicon.stop_words());
      for (const auto& c : context_sets)
        if (!s.empty() && !c.empty() && overlap_ratio(s, c) > kDefaultDelta) hit = true;
    }
    ok.push_back(hit);
  }
  return unique_match(ok);
}

}  // namespace

SynthMode parse_synth_mode(std::string_view name) {
  if (name == "causal-chain") return SynthMode::kCausalChain;
  if (name == "cooccurrence") return SynthMode::kCooccurrence;
  if (name == "mixed") return SynthMode::kMixed;
  throw std::invalid_argument("unknown synthetic mode '" + std::string(name) + "'");
}

std::string to_string(SynthMode mode) {
  switch (mode) {
    case SynthMode::kCausalChain:
      return "causal-chain";
    case SynthMode::kCooccurrence:
      return "cooccurrence";
    case SynthMode::kMixed:
      return "mixed";
  }
  return "mixed";
}

std::vector<ExampleRecord> generate_synthetic(std::uint64_t seed, std::size_t size, SynthMode mode) {
  if (size == 0) throw std::invalid_argument("generate_synthetic: size must be at least 1");
  std::mt19937_64 rng(seed);
  // Balanced labels: a shuffled round-robin over the four positions.
  std::vector<std::size_t> labels(size);
  for (std::size_t i = 0; i < size; ++i) labels[i] = i % 4;
  shuffle(labels, rng);
  std::vector<ExampleRecord> records;
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t label = labels[i];
    const bool causal = mode == SynthMode::kCausalChain || (mode == SynthMode::kMixed && pick(rng, 2) == 0);
    ExampleRecord r = causal ? causal_record(rng, label) : cooccurrence_record(rng, label);
    r.id = "synth-" + to_string(mode) + "-" + std::to_string(seed) + "-" + std::to_string(i);
    records.push_back(std::move(r));
  }
  return records;
}

std::optional<std::size_t> oracle_answer(const ExampleRecord& record, const LexiconSet& lexicon) {
  if (record.question == kCausalQuestion) return causal_oracle(record, lexicon);
  if (record.question == kCooccurrenceQuestion) return cooccurrence_oracle(record, lexicon);
  return std::nullopt;
}

}  // namespace logiformer
