#pragma once

// Templated multiple-choice tasks over a small entity/predicate vocabulary.
//
// causal-chain: the context states three implication chains between atoms
//   ("alice sings") with mixed connectives and clause orders. Each option is
//   an atom from the context; exactly one is derived by some link, the
//   distractors are the chain roots, which are stated but never derived.
// cooccurrence: the context lists facts "<entity> <predicate>"; exactly one
//   option restates a fact, distractors recombine entities and predicates
//   that all occur in the context.
// mixed: each record picks one of the two modes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logiformer/example.hpp"
#include "logiformer/lexicon.hpp"

namespace logiformer {

enum class SynthMode { kCausalChain, kCooccurrence, kMixed };

SynthMode parse_synth_mode(std::string_view name);
std::string to_string(SynthMode mode);

inline constexpr const char* kCausalQuestion = "which one of the following can be inferred from the passage ?";
inline constexpr const char* kCooccurrenceQuestion = "which one of the following is stated in the passage ?";

/// Deterministic per (seed, size, mode). Each label position occurs
/// size / 4 times, rounded up or down.
std::vector<ExampleRecord> generate_synthetic(std::uint64_t seed, std::size_t size, SynthMode mode);

/// Rule-based solver used to audit the generator: follows the parsed
/// implication graph for causal questions and counts token-set overlaps for
/// cooccurrence questions. Returns nullopt unless exactly one option
/// qualifies.
std::optional<std::size_t> oracle_answer(const ExampleRecord& record, const LexiconSet& lexicon);

}  // namespace logiformer
