#pragma once

// Per-option explanation bundles: units, both graphs, the logical
// expression, attention maps and gate statistics.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "logiformer/model.hpp"

namespace logiformer {

struct GateStats {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

GateStats gate_stats(const std::vector<double>& lambda);

/// One JSON document with an entry per option. Graphs appear as JSON and
/// DOT; attention maps are min-max normalized to [0, 1].
template <typename T>
nlohmann::json explain_example(const Logiformer<T>& model, const ExampleRecord& record,
                               const PreparedExample& prepared);

/// Writes explanation.json, option<i>_logic.dot, option<i>_syntax.dot and
/// the unnormalized attention maps as option<i>/<branch>/layer<l>_head<h>.csv
/// (i, l, h 1-based). Returns the JSON document.
template <typename T>
nlohmann::json write_explanation(const std::filesystem::path& dir, const Logiformer<T>& model,
                                 const ExampleRecord& record, const PreparedExample& prepared);

}  // namespace logiformer
